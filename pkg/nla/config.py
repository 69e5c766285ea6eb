import os

# Runtime settings, overridable through the environment
LOG_DIR = os.environ.get('NLA_LOG_DIR', 'logs')
LOG_LEVEL = os.environ.get('NLA_LOG_LEVEL', 'INFO').upper()
SWEEP_JOBS = int(os.environ.get('NLA_SWEEP_JOBS', '1'))
DEFAULT_SEED = int(os.environ.get('NLA_SEED', '1234'))

# Numerical tolerances
TRUNCATION_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
NORMALIZATION_TOL = 1e-9
DEGENERATE_P = 1e-300

# Physics defaults
DEFAULT_CUTOFF = 3
MAX_MODES = 6
DEFAULT_DARK_PROB = 1.3e-6
DIRECT_FIDELITY = 0.98
FIBRE_LOSS_DB_PER_KM = 0.2

# Fitted device parameters per scheme; the 'ideal' preset switches every imperfection off
PRESETS = {
    'ideal': {'eps1': 1.0, 'eps2': 1.0, 'delta1': 1.0, 'delta2': 1.0, 'dark_prob': 0.0},
    'methods-middle': {'eps1': 0.85, 'eps2': 0.85, 'delta1': 0.95, 'delta2': 0.80,
                       'dark_prob': DEFAULT_DARK_PROB},
    'methods-end': {'eps1': 0.78, 'eps2': 0.78, 'delta1': 0.95, 'delta2': 0.80,
                    'dark_prob': DEFAULT_DARK_PROB},
}

# 'methods' resolves per scheme
SCHEME_PRESETS = {
    'methods': {'end': 'methods-end', 'middle': 'methods-middle', 'direct': 'methods-middle'},
}


def preset_values(name, scheme):
    """Return the device parameters of a named preset for one scheme"""
    if name in SCHEME_PRESETS:
        name = SCHEME_PRESETS[name][scheme]
    if name not in PRESETS:
        from nla.errors import ConfigError
        raise ConfigError('preset', f"Unknown preset '{name}'")
    return dict(PRESETS[name])
