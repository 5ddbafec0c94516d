"""
Configuration management module for knob_tuner.

Every tunable default of the toolkit (Lasso grid, GP restarts, EI settings,
sampling and repair budgets, abort rule) lives on one Config singleton. A value
comes from a file named after the key in CONFIG_FOLDER, else from an environment
variable of the same name, else from the built-in default.
"""
import os
from pathlib import Path

import logging
logger = logging.getLogger(__name__)


def _to_bool(text):
    return text.strip().lower() == "true"


class Config:
    """
    Singleton holding the toolkit's tunable defaults.

    Defaults are declared as strings in four groups (strings, ints, floats,
    booleans); the group decides the conversion. Each resolved value is tracked
    in ``config_items`` as ``{"name", "value", "from"}`` with ``from`` one of
    ``file``, ``environment`` or ``default``.

    Library functions read a value here only when the caller passes ``None`` for
    the matching keyword argument.

    Example:
        >>> config = Config.get_instance()
        >>> config.LASSO_GRID_SIZE
        100
        >>> config.EI_XI
        0.01
    """
    _instance = None

    # key -> (lower bound, inclusive upper bound or None)
    LIMITS = {
        "LASSO_GRID_SIZE": (2, None),
        "LASSO_MAX_SWEEPS": (1, None),
        "RANK_MIN_SAMPLES": (2, None),
        "GP_RESTARTS": (1, None),
        "GP_REFIT_INTERVAL": (1, None),
        "GP_MAX_ITERATIONS": (1, None),
        "EI_CANDIDATES": (1, None),
        "EI_REFINE_STARTS": (0, None),
        "N_INIT_MIN": (2, None),
        "MAX_CONSECUTIVE_FAILURES": (1, None),
        "SAMPLE_ATTEMPTS_PER_CONFIG": (1, None),
        "REPAIR_PASSES": (0, None),
        "REPAIR_RESAMPLES": (0, None),
        "LASSO_MIN_RATIO": (0.0, 1.0),
        "EI_XI": (0.0, None),
        "BOUNDARY_EDGE_FRACTION": (0.0, 0.5),
    }

    def __init__(self):
        if Config._instance is not None:
            raise Exception("This class is a singleton!")
        Config._instance = self
        self.config_items = []

        # Declared for IDE code assist; initialize() assigns the real values
        self.BUILT_AT = ''
        self.CONFIG_FOLDER = ''
        self.LOGGING_LEVEL = ''
        self.METRICS_FILE = ''
        self.DEFAULT_WORKLOAD = ''

        # Ranking
        self.LASSO_GRID_SIZE = 0
        self.LASSO_MAX_SWEEPS = 0
        self.LASSO_TOLERANCE = 0.0
        self.LASSO_MIN_RATIO = 0.0
        self.RANK_MIN_SAMPLES = 0

        # Gaussian process
        self.GP_RESTARTS = 0
        self.GP_REFIT_INTERVAL = 0
        self.GP_MAX_ITERATIONS = 0

        # Optimizer
        self.EI_CANDIDATES = 0
        self.EI_REFINE_STARTS = 0
        self.EI_XI = 0.0
        self.N_INIT_MIN = 0
        self.MAX_CONSECUTIVE_FAILURES = 0
        self.BOUNDARY_EDGE_FRACTION = 0.0
        self.DYNAMIC_BOUNDS = True

        # Sampling
        self.SAMPLE_ATTEMPTS_PER_CONFIG = 0
        self.REPAIR_PASSES = 0
        self.REPAIR_RESAMPLES = 0

        self.config_strings = {
            "BUILT_AT": "LOCAL",
            "CONFIG_FOLDER": "./",
            "LOGGING_LEVEL": "INFO",
            "METRICS_FILE": "",
            "DEFAULT_WORKLOAD": "default",
        }
        self.config_ints = {
            "LASSO_GRID_SIZE": "100",
            "LASSO_MAX_SWEEPS": "10000",
            "RANK_MIN_SAMPLES": "20",
            "GP_RESTARTS": "8",
            "GP_REFIT_INTERVAL": "10",
            "GP_MAX_ITERATIONS": "200",
            "EI_CANDIDATES": "1024",
            "EI_REFINE_STARTS": "8",
            "N_INIT_MIN": "10",
            "MAX_CONSECUTIVE_FAILURES": "10",
            "SAMPLE_ATTEMPTS_PER_CONFIG": "1000",
            "REPAIR_PASSES": "32",
            "REPAIR_RESAMPLES": "1000",
        }
        self.config_floats = {
            "LASSO_TOLERANCE": "1e-7",
            "LASSO_MIN_RATIO": "1e-4",
            "EI_XI": "0.01",
            "BOUNDARY_EDGE_FRACTION": "0.1",
        }
        self.config_booleans = {
            "DYNAMIC_BOUNDS": "true",
        }

        self.initialize()
        self.configure_logging()

    def initialize(self):
        """
        Re-read every key from its source and re-validate.

        Raises:
            ValueError: a value does not convert to its group's type, or falls
                outside the limits in ``LIMITS``.
        """
        self.config_items = []
        groups = (
            (self.config_strings, str),
            (self.config_ints, int),
            (self.config_floats, float),
            (self.config_booleans, _to_bool),
        )
        for defaults, convert in groups:
            for key, default in defaults.items():
                text = self._get_config_value(key, default)
                try:
                    value = convert(text)
                except ValueError:
                    source = self.config_items[-1]["from"]
                    message = f"{key} from {source} is not a valid {convert.__name__}: {text!r}"
                    logger.error(message)
                    raise ValueError(message)
                setattr(self, key, value)
        self._check_limits()

    def _check_limits(self):
        for key, (low, high) in self.LIMITS.items():
            value = getattr(self, key)
            if value < low or (high is not None and value > high):
                upper = "" if high is None else f" and <= {high}"
                message = f"{key} must be >= {low}{upper}, got {value}"
                logger.error(message)
                raise ValueError(message)
        if self.LASSO_TOLERANCE <= 0:
            message = f"LASSO_TOLERANCE must be > 0, got {self.LASSO_TOLERANCE}"
            logger.error(message)
            raise ValueError(message)

    def configure_logging(self):
        """
        Apply LOGGING_LEVEL to the root logger (standard error, one format for
        every module) and quiet noisy third-party loggers.
        """
        self.LOGGING_LEVEL = getattr(logging, str(self.LOGGING_LEVEL), logging.INFO)

        for handler in logging.root.handlers[:]:
            logging.root.removeHandler(handler)

        logging.basicConfig(
            level=self.LOGGING_LEVEL,
            format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )

        logging.getLogger("matplotlib").setLevel(logging.WARNING)
        logging.getLogger("urllib3").setLevel(logging.WARNING)

        logger.debug(f"Configuration Initialized: {self.config_items}")

    def _get_config_value(self, name, default_value):
        """
        Raw text of ``name``: ``{CONFIG_FOLDER}/{name}`` file, then environment
        variable, then ``default_value``. The winning source is recorded in
        ``config_items``.
        """
        value = default_value
        from_source = "default"

        file_path = Path(self.CONFIG_FOLDER) / name
        if file_path.exists():
            value = file_path.read_text().strip()
            from_source = "file"
        elif os.getenv(name):
            value = os.getenv(name)
            from_source = "environment"

        self.config_items.append({
            "name": name,
            "value": value,
            "from": from_source
        })
        return value

    def to_dict(self):
        """Tracked items and the build stamp, for diagnostics."""
        return {
            "config_items": self.config_items,
            "built_at": self.BUILT_AT,
        }

    @staticmethod
    def get_instance():
        """
        The singleton, created on first use.

        Example:
            >>> restarts = Config.get_instance().GP_RESTARTS
        """
        if Config._instance is None:
            Config()
        return Config._instance
