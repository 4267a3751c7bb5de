from pathlib import Path

import pytest

from netsynth.config import Settings, format_settings, load_settings, parse_settings
from netsynth.errors import InputError

DEFAULTS = Path(__file__).resolve().parent.parent / "configs" / "defaults.cfg"


def test_shipped_defaults_match_code():
    assert load_settings(DEFAULTS) == Settings()


def test_format_round_trip():
    s = Settings(anti_bloat=0.2, recombination=False, distance_mode="exact")
    assert parse_settings(format_settings(s)) == s


def test_comments_and_blank_lines():
    s = parse_settings("# header\n\nstagnation = 50   # shorter\nrecombination = off\n")
    assert s.stagnation == 50 and s.recombination is False


def test_unknown_keys_are_listed():
    with pytest.raises(InputError, match="bogus, other"):
        parse_settings("bogus = 1\nother = 2\n")


@pytest.mark.parametrize("text", ["bins = many", "recombination = maybe", "no equals sign",
                                  "d_min = 6", "sampling_ratio = 0", "distance_mode = fast",
                                  "stagnation = 0"])
def test_rejected(text):
    with pytest.raises(InputError):
        parse_settings(text)


def test_validate_reports_every_problem():
    with pytest.raises(InputError) as exc:
        Settings(bins=0, stagnation=0).validate()
    assert "bins" in str(exc.value) and "stagnation" in str(exc.value)


def test_overrides_win(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("stagnation = 50\n")
    s = load_settings(path, {"stagnation": 7})
    assert s.stagnation == 7
    with pytest.raises(InputError):
        load_settings(path, {"nope": 1})


def test_missing_file():
    with pytest.raises(InputError, match="cannot read config"):
        load_settings("/nonexistent/run.cfg")


def test_search_config_mapping():
    s = Settings(d_min=1, d_max=3, max_steps=0, pagerank_alpha=0.9, bins=50)
    cfg = s.search_config((0.5, 1.0), seed=4)
    assert cfg.max_steps is None and cfg.seed == 4
    assert cfg.init.d_min == 1 and cfg.init.d_max == 3
    assert cfg.metrics.bins == 50 and cfg.metrics.pagerank.alpha == 0.9
    assert cfg.tolerance == s.snapshot_tolerance
    assert s.search_config().tolerance == s.anti_bloat
