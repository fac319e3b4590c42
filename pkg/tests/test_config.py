import pytest

from symmlab import config
from symmlab.config import ConfigError


def test_roundtrip():
    c = config.CaseConfig(case="e", domain="ellipse", eccentricity=1.2, p=3.0, f="step:2@0:1@0.1")
    assert config.loads(c.dumps()) == c


def test_int_and_float_coercion():
    c = config.loads('p = 2\nmode = 4.0\nh = "0.1"\n')
    assert isinstance(c.p, float) and c.mode == 4 and c.h == 0.1


@pytest.mark.parametrize("text", ['p = 1.0', 'N = 3', 'domain = "blob"', 'ellipse = 1', 'h = -1',
                                  'domain = "ellipse"', 'phi = "const:1"', 'n_levels = 10', 'p = [1]',
                                  'p = = 2', 'omega = 2.0'])
def test_invalid(text):
    with pytest.raises(ConfigError):
        config.loads(text)


def test_parse_sweep():
    assert config.parse_sweep("eccentricity=1.05, 1.1") == ("eccentricity", [1.05, 1.1])
    assert config.parse_sweep("f=const:1,const:2") == ("f", ["const:1", "const:2"])
    for bad in ("eccentricity", "eccentricity=", "p=a,b", "nope=1"):
        with pytest.raises(ConfigError):
            config.parse_sweep(bad)
