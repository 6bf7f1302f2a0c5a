import pytest
from hypothesis import given
from hypothesis import strategies as st

from hcprisk.errors import DomainError, InputParseError
from hcprisk.occupational import (
    OccupationProfile,
    bundled_profiles,
    occupation_case_study,
    ors_scores,
    read_occupations,
    transmission_prob_from_ors,
)

PUBLISHED = {
    "Registered Nurses": (95.67, 0.05, 0.2262),
    "Personal Care Aides": (48.54, 0.0254, 0.1206),
    "Nursing Assistants": (59.08, 0.0309, 0.1451),
    "Medical Assistants": (89.0, 0.0465, 0.2119),
    "Licensed Nurses": (52.94, 0.0277, 0.1309),
    "Respiratory Therapists": (64.47, 0.0337, 0.1575),
}


def test_bundled_profiles_reproduce_scores():
    scores = ors_scores(bundled_profiles())
    for name, (ors, _, _) in PUBLISHED.items():
        assert scores[name] == pytest.approx(ors, abs=5e-3)


@pytest.mark.parametrize("source", ["profiles", "scores"])
def test_case_study_rows(source):
    occ = bundled_profiles() if source == "profiles" else {k: v[0] for k, v in PUBLISHED.items()}
    rows = {r.name: r for r in occupation_case_study(occ, n_contacts=5, phi=20)}
    assert list(rows) == list(PUBLISHED)
    for name, (_, p_hat, pir) in PUBLISHED.items():
        assert rows[name].p_hat == pytest.approx(p_hat, abs=5e-5)
        assert rows[name].pir == pytest.approx(pir, abs=5e-5)


def test_zero_and_one_contact():
    occ = {k: v[0] for k, v in PUBLISHED.items()}
    assert all(r.pir == 0.0 for r in occupation_case_study(occ, n_contacts=0))
    assert all(r.pir == r.p_hat for r in occupation_case_study(occ, n_contacts=1))


def test_top_occupation_gets_one_over_phi():
    probs = transmission_prob_from_ors({"a": 3.0, "b": 1.5}, phi=4)
    assert probs == {"a": 0.25, "b": 0.125}


@pytest.mark.parametrize("phi", [0.5, 0.0, -3.0])
def test_phi_below_one_rejected(phi):
    with pytest.raises(DomainError):
        transmission_prob_from_ors({"a": 1.0}, phi=phi)


def test_bad_inputs():
    with pytest.raises(DomainError):
        transmission_prob_from_ors({"a": 1.0, "b": 0.0})
    with pytest.raises(DomainError):
        OccupationProfile("x", 101, 50, 50, 40)
    with pytest.raises(DomainError):
        OccupationProfile("x", 50, 50, 50, 0)
    with pytest.raises(DomainError):
        ors_scores([])


@given(st.dictionaries(st.text(min_size=1, max_size=5), st.floats(0.01, 100), min_size=1, max_size=8),
       st.floats(1.0, 100.0))
def test_probabilities_ordered_like_scores(scores, phi):
    probs = transmission_prob_from_ors(scores, phi)
    assert max(probs.values()) == pytest.approx(1 / phi)
    for a in scores:
        for b in scores:
            if scores[a] < scores[b]:
                assert probs[a] <= probs[b]
        assert 0 < probs[a] <= 1


def test_read_both_layouts(tmp_path):
    profiles = tmp_path / "p.csv"
    profiles.write_text("# note\nname,co,pp,ei,hours_per_week\nA,10,20,30,40\n")
    assert read_occupations(profiles)[0].mean_score == 20
    scores = tmp_path / "s.csv"
    scores.write_text("name,ors\nA,12.5\nB,3\n")
    assert read_occupations(scores) == {"A": 12.5, "B": 3.0}


def test_read_reports_physical_line():
    lines = ["# c1\n", "# c2\n", "name,ors\n", "A,1\n", "B,oops\n"]
    with pytest.raises(InputParseError, match="line 5"):
        read_occupations(lines)
    with pytest.raises(InputParseError, match="line 1"):
        read_occupations(["who,what\n"])
