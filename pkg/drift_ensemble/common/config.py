from typing import Any, Dict, Optional
import copy
import os

import yaml

from drift_ensemble.common.errors import ConfigError, StorageError


class Config():
    LOG_LEVEL = os.environ.get('DRIFT_LOG_LEVEL', 'INFO')
    SENTRY_ENDPOINT = os.environ.get('SENTRY_ENDPOINT', None)
    JOBS = int(os.environ.get('DRIFT_JOBS', 1))
    OUTPUT_DIR = os.environ.get('DRIFT_OUTPUT_DIR', 'out')


# Sections and keys accepted in a run config file. The type of each default
# is the type values are coerced to.
DEFAULTS: Dict[str, Dict[str, Any]] = {
    'ensemble': {
        'ws': 1000,
        'delta': [0.04],
        'es': 10,
        'output_weight': 5.0,
    },
    'elm': {
        'hidden_candidates': [10, 20, 40, 80],
        'cv_folds': 5,
        'activation': 'sigmoid',
        'ridge': 1e-6,
    },
    'surrogate': {
        'noise': 0.005,
        'outlier_prob': 0.002,
    },
    'corpus': {
        'sudden': 265,
        'gradual': 235,
        'length': 2000,
    },
    'run': {
        'master_seed': 0,
        'replicates': 5,
        'jobs': Config.JOBS,
        'output_dir': Config.OUTPUT_DIR,
        # 0 means ws + max(hidden_candidates)
        'init_size': 0,
        'lead': 100,
        'recovery_threshold': 1.0,
    },
}

def _coerce(section: str, key: str, value: Any) -> Any:
    default = DEFAULTS[section][key]
    try:
        if isinstance(default, list):
            if isinstance(value, str):
                value = [v for v in value.split(',') if v.strip()]
            elif not isinstance(value, (list, tuple)):
                value = [value]
            elem_type = type(default[0])
            return [elem_type(v) for v in value]
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ('1', 'true', 'yes', 'on')
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"expected an integer, got {value}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for {section}.{key}: {value!r} ({e})")


class RunConfig():
    """
    Settings for one command invocation: defaults, overlaid by a config file,
    overlaid by command line flags.
    """
    values: Dict[str, Dict[str, Any]]
    source: Optional[str]

    def __init__(self, values: Optional[Dict[str, Dict[str, Any]]] = None, source: Optional[str] = None):
        self.values = copy.deepcopy(DEFAULTS)
        self.source = source
        for section, entries in (values or {}).items():
            if section not in DEFAULTS:
                raise ConfigError(f"Unknown config section '{section}'")
            if not isinstance(entries, dict):
                raise ConfigError(f"Config section '{section}' must be a mapping of key/value pairs")
            for key, value in entries.items():
                self.set(section, key, value)

    def get(self, section: str, key: str) -> Any:
        return self.values[section][key]

    def set(self, section: str, key: str, value: Any):
        if section not in DEFAULTS:
            raise ConfigError(f"Unknown config section '{section}'")
        if key not in DEFAULTS[section]:
            raise ConfigError(f"Unknown config key '{section}.{key}'")
        self.values[section][key] = _coerce(section, key, value)

    def override(self, section: str, key: str, value: Any):
        """
        Apply a command line flag; None means the flag was not given.
        """
        if value is not None:
            self.set(section, key, value)

    def validate(self):
        from drift_ensemble.analysis.elm import ACTIVATIONS

        ens = self.values['ensemble']
        elm = self.values['elm']
        sur = self.values['surrogate']
        run = self.values['run']

        if not elm['hidden_candidates'] or min(elm['hidden_candidates']) < 1:
            raise ConfigError("elm.hidden_candidates must be a non-empty list of positive counts")
        if ens['ws'] < max(elm['hidden_candidates']):
            raise ConfigError(
                f"ensemble.ws ({ens['ws']}) must be >= the largest hidden layer candidate "
                f"({max(elm['hidden_candidates'])})")
        if not ens['delta'] or any(d <= 0 for d in ens['delta']):
            raise ConfigError("ensemble.delta values must be > 0")
        if ens['es'] < 1:
            raise ConfigError("ensemble.es must be >= 1")
        if ens['output_weight'] <= 0:
            raise ConfigError("ensemble.output_weight must be > 0")
        if elm['cv_folds'] < 2:
            raise ConfigError("elm.cv_folds must be >= 2")
        if elm['activation'] not in ACTIVATIONS:
            raise ConfigError(f"elm.activation must be one of {', '.join(sorted(ACTIVATIONS))}")
        if elm['ridge'] < 0:
            raise ConfigError("elm.ridge must be >= 0")
        if sur['noise'] < 0:
            raise ConfigError("surrogate.noise must be >= 0")
        if not 0 <= sur['outlier_prob'] < 1:
            raise ConfigError("surrogate.outlier_prob must be in [0, 1)")
        if self.values['corpus']['sudden'] < 0 or self.values['corpus']['gradual'] < 0:
            raise ConfigError("corpus series counts must be >= 0")
        if self.values['corpus']['length'] < 200:
            raise ConfigError("corpus.length must be >= 200")
        if run['replicates'] < 1:
            raise ConfigError("run.replicates must be >= 1")
        if run['jobs'] < 1:
            raise ConfigError("run.jobs must be >= 1")
        if run['init_size'] < 0:
            raise ConfigError("run.init_size must be >= 0")

    def ensemble_config(self, seed: Optional[int] = None):
        from drift_ensemble.analysis.ensemble import EnsembleConfig

        ens = self.values['ensemble']
        elm = self.values['elm']
        return EnsembleConfig(
            ws=ens['ws'],
            delta=tuple(ens['delta']),
            max_size=ens['es'],
            output_weight=ens['output_weight'],
            hidden_candidates=tuple(elm['hidden_candidates']),
            cv_folds=elm['cv_folds'],
            activation=elm['activation'],
            ridge=elm['ridge'],
            seed=self.values['run']['master_seed'] if seed is None else seed,
        )

    def surrogate_params(self):
        from drift_ensemble.ingest.surrogate import SurrogateParams

        return SurrogateParams(
            noise=self.values['surrogate']['noise'],
            outlier_prob=self.values['surrogate']['outlier_prob'],
        )

    @property
    def init_size(self) -> Optional[int]:
        return self.values['run']['init_size'] or None

    def dump(self) -> str:
        return yaml.safe_dump(self.values, sort_keys=True)


def load_run_config(path: Optional[str] = None) -> RunConfig:
    if path is None:
        return RunConfig()

    try:
        with open(path, 'r', encoding='utf8') as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise StorageError(f"Unable to read config file: {e.strerror}", path)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: unable to parse config file: {e}")

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config file must contain a mapping of sections")

    return RunConfig(data, source=path)
