import pytest

from coopharq.channel import SnrScale
from coopharq.scenario import GridPoint, ScenarioError, load_scenario, parse_scenario

BASE = """
[links.sd]
omega = 0.5
[links.sr]
omega = 1.0
[links.rd]
omega = 1.0

[protocol]
rate = 2.0
K = 2

[sweep]
gamma_t_db = [10, 0, 5]
rho = [0.8, 0.2]
m = [2, 1]
"""


def test_grid_is_sorted_product():
    sc = parse_scenario(BASE)
    grid = sc.grid()
    assert len(grid) == 12
    assert grid == sorted(grid)
    assert grid[0] == GridPoint(0.0, 0.2, 1.0, 2)


def test_config_builds_library_objects():
    sc = parse_scenario(BASE)
    cfg = sc.config(GridPoint(5.0, 0.8, 2.0, 2))
    assert cfg.K == 2 and cfg.rate == 2.0
    assert cfg.scale == SnrScale.from_db(5.0)
    assert cfg.links.sd.omega == (0.5, 0.5)
    assert cfg.links.rd.rho == 0.8 and cfg.links.rd.m == 2.0
    assert sc.config(GridPoint(5.0, 0.8, 2.0, 2), rate=1.5).rate == 1.5


def test_defaults():
    sc = parse_scenario(BASE)
    assert not sc.sim_enabled
    assert sc.correlation == "exponential"
    assert sc.search() is None and sc.search_tol == 1e-3


def test_full_document():
    text = BASE + """
[protocol.rate_search]
lo = 0.1
hi = 6.0
tol = 1e-4

[sim]
episodes = 20000
seed = 18446744073709551615

[numerics]
rel_tol = 1e-10
max_nodes = 4096
"""
    text = text.replace("K = 2", 'K = 2\ncorrelation = "product"\npayload_bits = 1024')
    sc = parse_scenario(text)
    assert sc.sim_enabled and sc.episodes == 20_000 and sc.seed == 2**64 - 1
    assert sc.search().hi == 6.0 and sc.search_tol == 1e-4
    assert sc.contour.rel_tol == 1e-10 and sc.contour.max_nodes == 4096
    cfg = sc.config(sc.grid()[0])
    assert cfg.links.sd.correlation == "product" and cfg.payload_bits == 1024


def test_single_point_grid():
    sc = parse_scenario(BASE.replace("[10, 0, 5]", "[3]").replace("[0.8, 0.2]", "[0.5]").replace("[2, 1]", "[1]"))
    assert sc.grid() == [GridPoint(3.0, 0.5, 1.0, 2)]


def test_per_link_parameters_without_sweep():
    text = """
[links.sd]
omega = [0.5, 0.4]
m = 1
rho = 0.3
[links.sr]
omega = 1.0
m = 1
rho = 0.3
[links.rd]
omega = 1.0
m = 1
rho = 0.3
[protocol]
rate = 1.0
[sweep]
gamma_t_db = [0]
K = [2, 1]
"""
    sc = parse_scenario(text)
    assert [p.K for p in sc.grid()] == [1, 2]
    assert sc.config(sc.grid()[1]).links.sd.omega == (0.5, 0.4)


@pytest.mark.parametrize(
    "edit,message",
    [
        (("gamma_t_db = [10, 0, 5]", "gamma_t_db = []"), "no grid"),
        (("[sweep]\ngamma_t_db = [10, 0, 5]", "[sweep]"), "no grid"),
        (("rate = 2.0", "rate = 2.0\nrates = [3.0, 1.0]"), "grid must ascend"),
        (("rate = 2.0", "rate = 2.0\nrate_cap = 1"), "unknown key"),
        (("omega = 0.5", "omega = 0.5\nmean = 1"), "links.sd"),
        (("omega = 0.5", "omega = -0.5"), "omega"),
        (("rho = [0.8, 0.2]", "rho = [1.0]"), "rho"),
        (("K = 2", "K = 0"), "K"),
        (("K = 2", 'K = 2\ncorrelation = "banded"'), "correlation"),
        (("K = 2", "K = 2.5"), "K"),
        (("rate = 2.0", 'rate = "fast"'), "rate"),
        (("[links.rd]\nomega = 1.0", ""), "links.rd"),
        (("omega = 0.5", "omega = [0.5]"), "rounds"),
    ],
)
def test_errors(edit, message):
    with pytest.raises(ScenarioError, match=message):
        parse_scenario(BASE.replace(*edit))


def test_syntax_error_reports_line():
    with pytest.raises(ScenarioError, match="line"):
        parse_scenario(BASE + "\n[sim\n", "bad.toml")


def test_sim_section_checks():
    with pytest.raises(ScenarioError, match="episodes"):
        parse_scenario(BASE + "[sim]\nepisodes = 10\n")
    with pytest.raises(ScenarioError, match="seed"):
        parse_scenario(BASE + "[sim]\nseed = -1\n")
    with pytest.raises(ScenarioError, match="enabled"):
        parse_scenario(BASE + '[sim]\nenabled = "yes"\n')
    assert not parse_scenario(BASE + "[sim]\nenabled = false\nepisodes = 20000\n").sim_enabled


def test_sweep_and_link_conflict():
    with pytest.raises(ScenarioError, match="both"):
        parse_scenario(BASE.replace("omega = 0.5", "omega = 0.5\nm = 1"))


def test_load_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "absent.toml")
    path = tmp_path / "s.toml"
    path.write_text(BASE)
    assert load_scenario(path).grid() == parse_scenario(BASE).grid()
