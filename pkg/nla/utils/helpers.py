import os
import json
import logging
import math

import numpy as np

from nla import config

_FORMATTER = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')


def get_logger(name):
    """Create a named logger writing to the console and, when enabled, to the log file"""
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, config.LOG_LEVEL, logging.INFO))

    # Only add handlers if none exist to avoid duplicate logs
    if not logger.handlers:
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(_FORMATTER)
        logger.addHandler(console_handler)
        logger.propagate = False
        if config.LOG_DIR:
            try:
                os.makedirs(config.LOG_DIR, exist_ok=True)
                file_handler = logging.FileHandler(os.path.join(config.LOG_DIR, 'nla.log'))
                file_handler.setFormatter(_FORMATTER)
                logger.addHandler(file_handler)
            except OSError as e:
                logger.warning(f"Logging to console only, cannot open log file in {config.LOG_DIR}: {e}")
    return logger


def format_float(value, digits=12):
    """Format a number with a fixed count of significant digits"""
    return f"{float(value):.{digits}g}"


def round_sig(value, digits=12):
    """Round a float to a fixed count of significant digits"""
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        return value
    return float(format_float(value, digits))


class ResultEncoder(json.JSONEncoder):
    """JSON encoder that handles numpy scalars and arrays"""
    def default(self, obj):
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return round_sig(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return super().default(obj)


def to_json(data):
    """Serialize results with 12 significant digits and stable key order"""
    def _clean(value):
        if isinstance(value, dict):
            return {k: _clean(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [_clean(v) for v in value]
        if isinstance(value, np.ndarray):
            return _clean(value.tolist())
        if isinstance(value, (float, np.floating)):
            # JSON has no NaN or infinity
            return round_sig(value) if math.isfinite(value) else None
        return value
    return json.dumps(_clean(data), cls=ResultEncoder, indent=2, allow_nan=False)

