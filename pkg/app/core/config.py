import os

from app.core.exceptions import InputValidationError

# Toolkit Configuration
TREG_CONFIG = {
    "random": {
        "default_seed": 0,              # Used when neither --seed nor TREG_SEED is given
        "seed_env_var": "TREG_SEED",
    },
    "loss_weights": {
        "beta": 1.0,                    # Invariance (MSE) weight
        "gamma": 1.0,                   # MST length weight
        "lambda_s": 10.0,               # Soft sphere weight, kept >> gamma for synthetic runs
        "nu": 25.0,                     # Variance hinge weight
        "tau": 1.0,                     # Covariance weight
        "epsilon": 1e-4,                # Variance stabilizer
    },
    "descent": {
        "method": "gd",                 # "gd" or "adam"
        "lr": 0.01,
        "lr_schedule": "constant",      # "constant", "linear" or "exp"
        "min_lr": 1e-6,                 # Floor of the decaying schedules
        "steps": 1000,
        "record_every": 10,
        "divergence_limit": 1e6,        # Abort once any |coordinate| exceeds this
        "dilation_cap": 10.0,           # lambda=0 runs stop once mean norm > cap * initial
        "burn_in_fraction": 0.05,
        "monotone_rel_tol": 1e-2,       # Allowed relative rise of the total after burn-in
        "view_noise": 0.01,             # Second view perturbation for the two-view objective
        "adam": {
            "beta1": 0.9,
            "beta2": 0.999,
            "eps": 1e-8,
        },
    },
    "mst": {
        "brute_force_max_points": 8,    # n^(n-2) spanning trees beyond this are not enumerated
    },
    "uniformity": {
        "histogram_bins": 64,
        "collapse_n": 2000,             # Desk-scale stand-in for 10,000 points
        "collapse_dim": 256,            # Desk-scale stand-in for d = 1024
        "collapse_etas": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
    },
    "dimension": {
        "sizes": [256, 512, 1024, 2048, 4096, 8192],
        "trials": 5,
        "min_sizes": 4,                 # Distinct sample sizes required by the fit
        "min_span": 8.0,                # max(size) / min(size)
        "min_size": 4,
    },
    "verification": {
        "oracle_clouds": 500,
        "oracle_max_points": 7,
        "lemma1_clouds": 1000,
        "gradient_clouds": 100,
        "gradient_step": 1e-5,
        "gradient_rtol": 1e-4,
        "uniformity_clouds": 200,
        "density_trials": 20,
        "density_points": 512,
        "density_kappa": 10.0,
        "simplex_trials": 200,
    },
    "parallel": {
        "default_threads": 1,           # Results are identical for any thread count
    },
    "logging": {
        "level": "INFO",
        "log_dir": None,                # None = <project root>/logs
        "max_bytes": 10 * 1024 * 1024,  # 10MB
        "backup_count": 5,
    },
    "io": {
        "default_output_root": "runs",
        "history_file": "history.jsonl",
        "summary_file": "summary.json",
        "manifest_file": "manifest.json",
    },
}

# Experiment presets. Optimizer settings are calibrated for this toolkit.
EXPERIMENT_PRESETS = {
    "fig2-3d": {
        "description": "256 points on a spherical spiral in R^3 spread by T-REG",
        "calibrated": True,
        "generator": {"kind": "curve-on-sphere", "n": 256, "d": 3, "params": {"turns": 1.5}},
        "optim": {
            "objective": "treg",
            "method": "adam",
            "lr": 0.005,
            "steps": 3000,
            "record_every": 10,
            "weights": {"gamma": 1.0, "lambda_s": 10.0},
        },
    },
    "fig2-3d-no-sphere": {
        "description": "Same spiral optimized with the MST term only (dilates)",
        "calibrated": True,
        "generator": {"kind": "curve-on-sphere", "n": 256, "d": 3, "params": {"turns": 1.5}},
        "optim": {
            "objective": "treg",
            "method": "adam",
            "lr": 0.02,
            "steps": 5000,
            "record_every": 10,
            "weights": {"gamma": 1.0, "lambda_s": 0.0},
        },
    },
    "fig2-highdim": {
        "description": "256 points near e1 in R^256 driven to the regular simplex on the unit sphere",
        "calibrated": True,
        "generator": {"kind": "near-point", "n": 256, "d": 256, "params": {"radius": 0.001}},
        "optim": {
            "objective": "treg",
            "method": "adam",
            "lr": 0.01,
            "lr_schedule": "exp",
            "min_lr": 1e-5,
            "steps": 6000,
            "record_every": 20,
            "constraint": "clamp-to-ball",
            "radius": 1.0,
            "weights": {"gamma": 1.0, "lambda_s": 20.0},
        },
    },
    "figE2-circle": {
        "description": "256 points on a circle in R^3 (third coordinate jittered) spread onto the sphere",
        "calibrated": True,
        "generator": {"kind": "circle-collapsed", "n": 256, "d": 3, "params": {"jitter": 1e-3}},
        "optim": {
            "objective": "treg",
            "method": "adam",
            "lr": 0.005,
            "steps": 3000,
            "record_every": 10,
            "weights": {"gamma": 1.0, "lambda_s": 10.0},
        },
    },
    "figE2-circle-no-sphere": {
        "description": "Same circle optimized with the MST term only (dilates)",
        "calibrated": True,
        "generator": {"kind": "circle-collapsed", "n": 256, "d": 3, "params": {"jitter": 1e-3}},
        "optim": {
            "objective": "treg",
            "method": "adam",
            "lr": 0.02,
            "steps": 5000,
            "record_every": 10,
            "weights": {"gamma": 1.0, "lambda_s": 0.0},
        },
    },
    "fig6-varcov": {
        "description": "Variance-covariance baseline on a rotated non-isotropic Gaussian",
        "calibrated": True,
        "generator": {
            "kind": "non-isotropic-gaussian",
            "n": 1000,
            "d": 2,
            "params": {"stds": [1.0, 0.25], "rotation_deg": 30.0},
        },
        "optim": {
            "objective": "var-cov",
            "method": "adam",
            "lr": 0.01,
            "steps": 1000,
            "record_every": 10,
            "weights": {"nu": 25.0, "tau": 1.0},
        },
    },
    "fig6-treg": {
        "description": "T-REG on the same non-isotropic Gaussian",
        "calibrated": True,
        "generator": {
            "kind": "non-isotropic-gaussian",
            "n": 1000,
            "d": 2,
            "params": {"stds": [1.0, 0.25], "rotation_deg": 30.0},
        },
        "optim": {
            "objective": "treg",
            "method": "adam",
            "lr": 0.01,
            "steps": 1000,
            "record_every": 10,
            "weights": {"gamma": 1.0, "lambda_s": 0.1},
        },
    },
    "simplex-small": {
        "description": "4 Gaussian points in R^3 converging to a regular tetrahedron",
        "calibrated": True,
        "generator": {"kind": "isotropic-gaussian", "n": 4, "d": 3, "params": {}},
        "optim": {
            "objective": "treg",
            "method": "gd",
            "lr": 0.01,
            "steps": 5000,
            "record_every": 50,
            "weights": {"gamma": 1.0, "lambda_s": 10.0},
        },
    },
}


def get_default_seed() -> int:
    """
    Resolve the default RNG seed.

    Returns:
        The integer in TREG_SEED when set, otherwise the configured default.
    """
    env_var = TREG_CONFIG["random"]["seed_env_var"]
    raw = os.getenv(env_var)
    if raw is None or raw.strip() == "":
        return TREG_CONFIG["random"]["default_seed"]
    try:
        return int(raw)
    except ValueError:
        raise InputValidationError(f"{env_var} must be an integer, got {raw!r}")


def get_preset(name: str) -> dict:
    """Look up an experiment preset by name."""
    if name not in EXPERIMENT_PRESETS:
        known = ", ".join(sorted(EXPERIMENT_PRESETS))
        raise InputValidationError(f"Unknown preset {name!r}; known presets: {known}")
    return EXPERIMENT_PRESETS[name]
