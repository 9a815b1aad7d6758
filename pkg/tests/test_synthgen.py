from datetime import date
from pathlib import Path

import pytest

from adherence import synthgen
from adherence.ingestion import (
    cleanse,
    parse_database,
    write_database,
)
from adherence.sessionize import windows_for_database
from adherence.synthgen import SynthConfig, generate


def file_bytes(directory: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(Path(directory).glob("*.csv"))}


class TestConfigValidation:
    def test_zero_users(self):
        with pytest.raises(ValueError, match="n_users"):
            SynthConfig(n_users=0).validate()

    def test_inverted_dates(self):
        with pytest.raises(ValueError, match="start_date"):
            SynthConfig(start_date=date(2020, 1, 1), end_date=date(2019, 1, 1)).validate()

    def test_bad_probability(self):
        with pytest.raises(ValueError, match="dropout_hazard"):
            SynthConfig(dropout_hazard=1.5).validate()

    def test_bad_null_rate(self):
        with pytest.raises(ValueError, match="null rate"):
            SynthConfig(null_rates={("ucla", 3): 1.2}).validate()

    def test_unknown_questionnaire(self):
        with pytest.raises(ValueError, match="unknown questionnaire"):
            SynthConfig(null_rates={("who5", 1): 0.1}).validate()

    def test_generate_rejects_invalid(self):
        with pytest.raises(ValueError):
            generate(SynthConfig(n_users=0))


class TestDeterminism:
    def test_same_seed_byte_identical_files(self, tmp_path):
        cfg = SynthConfig(seed=11, n_users=40)
        write_database(generate(cfg), tmp_path / "a")
        write_database(generate(cfg), tmp_path / "b")
        assert file_bytes(tmp_path / "a") == file_bytes(tmp_path / "b")

    def test_different_seeds_differ(self):
        a = generate(SynthConfig(seed=1, n_users=40))
        b = generate(SynthConfig(seed=2, n_users=40))
        assert a.events != b.events


class TestGeneratedShape:
    def test_round_trip_parses_with_zero_rejects(self, tmp_path, small_db):
        paths = write_database(small_db, tmp_path / "db")
        db = parse_database(paths)
        assert db.rejects == []
        assert len(db.events) == len(small_db.events)

    def test_all_statuses_valid(self, small_db):
        assert {p.status for p in small_db.profiles.values()} <= {"StillUsing", "Finished", "Dropout"}

    def test_demographics_within_ranges(self, small_db):
        for p in small_db.profiles.values():
            assert 1924 <= p.birth_year <= 1974
            assert 0 <= p.education <= 8
            assert 1 <= p.technology <= 3
            assert 3 <= p.use_case <= 7

    def test_hazard_one_kills_almost_all_windows(self):
        # with waning disabled every user stops right after their first session
        cfg = SynthConfig(seed=3, n_users=80, dropout_hazard=1.0, waning_sessions=0)
        db = generate(cfg)
        cleansed, _ = cleanse(db)
        samples = windows_for_database(cleansed)
        assert sum(s.label for s in samples) == 0  # no high-adherence windows at all
        by_user = db.events_by_user()
        for events in by_user.values():
            days = {e.timestamp for e in events}
            assert (max(days) - min(days)).days <= 3  # all inside one MonThu session

    def test_null_rate_controls_missingness(self):
        cfg = SynthConfig(
            seed=5,
            n_users=400,
            null_rates={**synthgen.DEFAULT_NULL_RATES, ("ucla", 3): 0.8},
        )
        db = generate(cfg)
        missing = sum(1 for p in db.profiles.values() if ("ucla", 3) not in p.answers)
        assert missing / 400 == pytest.approx(0.8, abs=0.05)

    def test_majority_low_adherence_on_defaults(self):
        cfg = SynthConfig(seed=7, n_users=120)
        cleansed, _ = cleanse(generate(cfg))
        samples = windows_for_database(cleansed)
        labels = [s.label for s in samples]
        assert len(labels) > 100
        assert sum(labels) / len(labels) < 0.5

    def test_writes_canonical_schema(self, tmp_path, small_db):
        d = tmp_path / "db"
        write_database(small_db, d)
        expected = {
            "acquisitions_braingames.csv",
            "acquisitions_fingertapping.csv",
            "acquisitions_mindfulness.csv",
            "acquisitions_physical.csv",
            "demographics.csv",
            "spq_1.csv",
            "spq_3.csv",
            "ucla_1.csv",
            "ucla_3.csv",
            "eq5d3l_1.csv",
            "eq5d3l_3.csv",
            "utaut_3.csv",
        }
        assert {p.name for p in d.glob("*.csv")} == expected
