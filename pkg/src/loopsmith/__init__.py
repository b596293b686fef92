"""Control-engineering toolkit for a magnetically restored rotary
actuator: drive-circuit modeling, loop analysis, compensator synthesis,
pole-placement and feedback-linearizing position control, and hybrid
closed-loop simulation."""

from .actuator import (
    ActuatorParams,
    electrical_tf,
    initial_state,
    linear_ss_current,
    linear_ss_voltage,
    mechanical_tf,
    nonlinear_derivs,
)
from .config import (
    ControlConfig,
    ProjectConfig,
    apply_overrides,
    build_controller,
    config_hash,
    default_project_config,
    load_config,
    save_config,
)
from .drive import (
    DriveBlocks,
    DriveConfig,
    LeadDesign,
    LeadLagSpec,
    OpAmpSpec,
    assemble_drive,
    current_sensor,
    design_lead_lag,
    divider_gain,
    lag_tf,
    lead_tf,
    opamp_open_loop,
    power_stage,
)
from .errors import (
    ConfigError,
    DesignError,
    DiscretizationError,
    DivergenceError,
    LoopsmithError,
    MetricError,
    NoCrossoverError,
    NumericError,
    PoleEvaluationError,
    SingularLoopError,
    UncontrollableError,
    UnobservableError,
)
from .fblin import (
    FLController,
    VelocityEstimator,
    fl_gains,
    fl_loop_tfs,
    fl_margins,
    fl_transform,
)
from .gangs import (
    GANG_LABELS,
    GangSet,
    gang_bode,
    injection_step,
    peak_magnitude,
    sensitivity_report,
    six_gangs,
)
from .lti import (
    FrequencyResponse,
    Margins,
    Polynomial,
    RationalTF,
    StateSpaceModel,
    apply_delay,
    bandwidth_3db,
    bode,
    char_poly,
    margins,
    poly_roots,
    simulate_tf,
    ss_eigenvalues,
    ss_to_tf,
    step_response,
    tf_const,
    tf_eval,
    tf_feedback,
    tf_s,
)
from .poleplace import (
    PositionDesign,
    ReducedObserver,
    ackermann_gain,
    close_with_current_loop,
    closed_loop_ss,
    closed_loop_tf,
    compensator_ss,
    controllability_matrix,
    design_position_controller,
    desired_char_poly,
    discretize_forward_euler,
    input_gain,
    max_stable_step,
    observability_matrix,
    observer_gain,
    poly_of_matrix,
    reduced_order_observer,
)
from .sim import (
    DAC_GAIN_CURRENT,
    DAC_GAIN_VOLTAGE,
    CurrentLoopModel,
    FLCurrentController,
    OpenLoopController,
    PolePlaceCurrentController,
    PolePlaceVoltageController,
    Reference,
    Saturation,
    SimConfig,
    SimTrace,
    StepMetrics,
    frf_bin,
    rk4_endpoint,
    simulate,
    sine_sweep_frf,
    step_metrics,
)

__version__ = "0.1.0"
