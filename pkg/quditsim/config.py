from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Integrator
    dt_ns: float = 0.01
    sample_interval_ns: float = 1.0
    norm_tolerance: float = 1e-8
    trace_tolerance: float = 1e-6
    positivity_floor: float = -1e-6

    # Default decoherence (ns); T_phi = tphi_factor * T2*
    t1_ns: float = 30000.0
    t2_star_ns: float = 3000.0
    tphi_factor: float = 6.0

    # Frequency planner
    planner_threshold_ghz: float = 0.05
    planner_budget: int = 10000
    planner_window_ghz: float = 0.35
    planner_dressing_limit: float = 0.08
    planner_band_ghz: tuple[float, float] = (4.0, 6.0)
    planner_min_spacing_ghz: float = 0.05
    planner_lambda_tolerance: float = 1.25

    # Effective coupling
    bright_overlap_threshold: float = 0.8
    perturbative_margin: float = 10.0
    retune_span_ghz: float = 0.03

    # Fitting
    fit_residual_limit: float = 0.05

    # Execution
    max_workers: int = 1

    # Output
    output_root: str = "./runs"
    csv_precision: int = 12
    log_level: str = "INFO"

    model_config = {"env_prefix": "QUDITSIM_", "env_file": ".env", "env_file_encoding": "utf-8"}


settings = Settings()
