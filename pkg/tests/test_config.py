import pytest

from drift_ensemble.analysis.ensemble import MemoryMode
from drift_ensemble.common.config import DEFAULTS, RunConfig, load_run_config
from drift_ensemble.common.errors import ConfigError, StorageError


def test_defaults():
    cfg = RunConfig()
    assert cfg.get('ensemble', 'ws') == 1000
    assert cfg.get('ensemble', 'delta') == [0.04]
    assert cfg.init_size is None
    cfg.validate()

    ens = cfg.ensemble_config()
    assert ens.ws == 1000
    assert ens.max_size == 10
    assert ens.memory_mode == MemoryMode.STM_PLUS_LTM
    assert ens.largest_hidden == max(DEFAULTS['elm']['hidden_candidates'])


def test_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig({'ensemble': {'window': 10}})
    with pytest.raises(ConfigError):
        RunConfig({'optimizer': {}})
    with pytest.raises(ConfigError):
        RunConfig({'ensemble': [1, 2]})


def test_coercion():
    cfg = RunConfig({'ensemble': {'ws': '200', 'delta': '0.02,0.05'}, 'elm': {'hidden_candidates': 20}})
    assert cfg.get('ensemble', 'ws') == 200
    assert cfg.get('ensemble', 'delta') == [0.02, 0.05]
    assert cfg.get('elm', 'hidden_candidates') == [20]
    assert cfg.ensemble_config().delta == (0.02, 0.05)
    with pytest.raises(ConfigError):
        RunConfig({'ensemble': {'ws': 'big'}})
    with pytest.raises(ConfigError):
        RunConfig({'ensemble': {'es': 2.5}})


def test_precedence(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text('ensemble:\n  ws: 300\n  es: 5\nrun:\n  master_seed: 4\n')
    cfg = load_run_config(str(path))
    assert cfg.source == str(path)
    assert cfg.get('ensemble', 'ws') == 300

    cfg.override('ensemble', 'ws', 400)
    cfg.override('ensemble', 'es', None)
    assert cfg.get('ensemble', 'ws') == 400
    assert cfg.get('ensemble', 'es') == 5
    assert cfg.ensemble_config().seed == 4
    assert cfg.ensemble_config(seed=9).seed == 9


def test_validate():
    with pytest.raises(ConfigError):
        RunConfig({'ensemble': {'ws': 20}}).validate()
    with pytest.raises(ConfigError):
        RunConfig({'ensemble': {'delta': [0.0]}}).validate()
    with pytest.raises(ConfigError):
        RunConfig({'elm': {'activation': 'relu'}}).validate()
    with pytest.raises(ConfigError):
        RunConfig({'corpus': {'length': 100}}).validate()
    with pytest.raises(ConfigError):
        RunConfig({'run': {'jobs': 0}}).validate()


def test_load_errors(tmp_path):
    with pytest.raises(StorageError):
        load_run_config(str(tmp_path / 'missing.yaml'))

    broken = tmp_path / 'broken.yaml'
    broken.write_text('ensemble: [ws: 1\n')
    with pytest.raises(ConfigError):
        load_run_config(str(broken))

    scalar = tmp_path / 'scalar.yaml'
    scalar.write_text('42\n')
    with pytest.raises(ConfigError):
        load_run_config(str(scalar))

    empty = tmp_path / 'empty.yaml'
    empty.write_text('')
    assert load_run_config(str(empty)).get('ensemble', 'ws') == 1000


def test_dump_round_trips(tmp_path):
    cfg = RunConfig({'ensemble': {'ws': 250}})
    path = tmp_path / 'dumped.yaml'
    path.write_text(cfg.dump())
    assert load_run_config(str(path)).values == cfg.values
