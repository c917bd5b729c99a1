import numpy as np

from semforecast.evaluate.synthetic import ConstructSpec, generate_synthetic_economy
from semforecast.lexicon import bind, load_lexicon
from semforecast.textpipe import build_period_counts, load_corpus, tokenize


def test_same_seed_gives_identical_outputs(tmp_path):
    a = generate_synthetic_economy(11, 60)
    b = generate_synthetic_economy(11, 60)
    np.testing.assert_array_equal(a.matrix.counts, b.matrix.counts)
    np.testing.assert_array_equal(a.y, b.y)
    pa, pb = a.write(tmp_path / "a"), b.write(tmp_path / "b")
    for key in pa:
        assert pa[key].read_bytes() == pb[key].read_bytes()
    c = generate_synthetic_economy(12, 60)
    assert not np.array_equal(a.y, c.y)


def _innovation_loadings(eco, mu=10.0, rho=0.5):
    innov = eco.y[1:] - mu - rho * (eco.y[:-1] - mu)
    F = eco.factors[:, :-1].T
    return np.linalg.lstsq(F, innov, rcond=None)[0]


def test_zero_loading_makes_y_independent_of_text():
    specs = (ConstructSpec("positive", 5, 0.0), ConstructSpec("negative", 5, 0.0))
    beta = _innovation_loadings(generate_synthetic_economy(3, 2000, specs))
    assert np.all(np.abs(beta) < 0.1)


def test_loadings_enter_the_indicator():
    beta = _innovation_loadings(generate_synthetic_economy(3, 2000))
    np.testing.assert_allclose(beta, [2.0, -1.0], atol=0.1)


def test_shapes_and_lexicon():
    eco = generate_synthetic_economy(5, 50, n_noise_terms=10)
    assert eco.matrix.counts.shape == (50, 50)
    assert eco.factors.shape == (2, 50)
    assert eco.lexicon.constructs == ("positive", "negative")
    sets = bind(eco.lexicon, eco.matrix.vocabulary)
    np.testing.assert_array_equal(sets["positive"], np.arange(20))
    np.testing.assert_array_equal(sets["negative"], np.arange(20, 40))
    assert eco.periods[0] == "2000-01"


def test_words_survive_the_text_pipeline():
    eco = generate_synthetic_economy(5, 20)
    assert all(tokenize(w) == [w] for w in eco.words)


def test_written_files_rebuild_the_same_counts(tmp_path):
    eco = generate_synthetic_economy(9, 40)
    paths = eco.write(tmp_path)
    m = build_period_counts(load_corpus(paths["corpus"]), "monthly", vocab_policy=0.0)
    order = [eco.matrix.terms.index(t) for t in m.terms]
    np.testing.assert_array_equal(m.counts, eco.matrix.counts[:, order])
    lex = load_lexicon(paths["lexicon"])
    assert {k: set(v) for k, v in lex.membership.items()} == \
        {k: set(v) for k, v in eco.lexicon.membership.items()}
    lines = paths["indicator"].read_text().splitlines()
    assert lines[0] == "period,value" and len(lines) == 41


def test_factor_drives_term_counts():
    eco = generate_synthetic_economy(1, 300)
    pos = eco.matrix.counts[:, :20].sum(axis=1)
    assert np.corrcoef(pos, eco.factors[0])[0, 1] > 0.5


def test_random_walk_variant():
    eco = generate_synthetic_economy(2, 300, random_walk=True)
    assert np.std(np.diff(eco.y)) < np.std(eco.y)
