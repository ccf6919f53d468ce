import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from conftest import scenario_path
from dissent.config import engine_for_scenario
from dissent.engine import load_scenario
from dissent.estimators import DebateClassifier, ExponentialDecayRegressor, UncertaintyScorer, UncertaintyWeighter
from dissent.game import softmax_weights
from dissent.model import AgentOutput, TaskInput, TokenDistribution


def test_scorer_mixes_text_and_outputs():
    out = AgentOutput("x", (TokenDistribution.from_probs([0.5, 0.5]),))
    col = UncertaintyScorer().fit_transform(["plain words", out])
    assert col.shape == (2, 1)
    assert col[1, 0] == 1.0
    assert col[0, 0] == pytest.approx(1 / (1 + math.exp(0.3)))


def test_weighter_matches_softmax_weights():
    X = np.array([[0.2, 0.5, 0.8], [0.1, 0.1, 0.1]])
    W = UncertaintyWeighter(beta=1.5).fit_transform(X)
    assert W[0] == pytest.approx(softmax_weights(X[0], 1.5).weights, abs=1e-12)
    assert W[1] == pytest.approx([1 / 3] * 3)
    with pytest.raises(ValueError):
        UncertaintyWeighter().fit(X).transform(np.array([[0.1, 0.2]]))
    with pytest.raises(ValueError):
        UncertaintyWeighter().fit(X).transform(np.array([[0.1, 0.2, 1.5]]))


def test_weighter_in_pipeline_and_clone():
    pipe = make_pipeline(UncertaintyWeighter(beta=0.0))
    assert pipe.fit_transform(np.array([[0.9, 0.1]]))[0] == pytest.approx([0.5, 0.5])
    assert clone(UncertaintyWeighter(beta=2.0)).get_params() == {"beta": 2.0}


def test_decay_regressor():
    k = np.arange(4).reshape(-1, 1)
    y = 0.66 * np.exp(-0.51 * k[:, 0])
    reg = ExponentialDecayRegressor().fit(k, y)
    assert reg.lambda_ == pytest.approx(0.51, abs=1e-9)
    assert reg.decay_rate_ == pytest.approx(0.3995, abs=1e-4)
    assert reg.predict(k) == pytest.approx(y)
    assert reg.score(k, y) == pytest.approx(1.0)


def test_debate_classifier():
    sc = load_scenario(scenario_path("fast_converge"))

    def factory(params):
        return engine_for_scenario(sc, **{k: v for k, v in params.to_dict().items() if k not in ("n_base", "n_crit")})

    clf = DebateClassifier(factory).fit([sc.task], ["A"])
    assert list(clf.classes_) == ["A", "B", "C"]
    assert list(clf.predict([sc.task])) == ["A"]
    assert clf.transcripts_[0].debate_rounds == 1
    capped = DebateClassifier(factory, {"k_max": 0}).fit([sc.task])
    capped.predict([sc.task])
    assert capped.transcripts_[0].debate_rounds == 0


def test_debate_classifier_validation():
    with pytest.raises(ValueError):
        DebateClassifier().fit([TaskInput("t", "q")])
    with pytest.raises(TypeError):
        DebateClassifier(lambda p: None).fit(["not a task"])
