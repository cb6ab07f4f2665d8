import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import TINY_CORPUS, tiny_model
from tkrank import tensor as T
from tkrank.config import TrainConfig
from tkrank.metrics import Qrels
from tkrank.training import (
    EarlyStopState,
    TrainingError,
    TrainingTriple,
    ValidationSet,
    batch_hinge_loss,
    hinge_loss,
    train,
)


def test_hinge_examples():
    assert hinge_loss(2.0, 0.5) == 0.0
    assert hinge_loss(0.3, 0.3) == 1.0
    assert hinge_loss(0.2, 0.5) == pytest.approx(1.3, abs=1e-15)
    with pytest.raises(ValueError):
        hinge_loss(1.0, 0.0, margin=0.0)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=10), st.floats(0.1, 3))
def test_batch_loss_is_mean_hinge_and_non_negative(pairs, margin):
    pos = T.Tensor([p for p, _ in pairs])
    neg = T.Tensor([n for _, n in pairs])
    loss = batch_hinge_loss(pos, neg, margin).item()
    assert loss >= 0.0
    assert loss == pytest.approx(np.mean([hinge_loss(p, n, margin) for p, n in pairs]), abs=1e-12)
    satisfied = all(p - n >= margin for p, n in pairs)
    assert (loss == 0.0) == satisfied or abs(loss) < 1e-12


def test_subgradient_is_zero_at_kink():
    pos = T.Parameter("p", np.array([1.0]), "B")
    neg = T.Parameter("n", np.array([0.0]), "B")
    batch_hinge_loss(pos, neg, 1.0).backward()
    assert pos.grad[0] == 0.0 and neg.grad[0] == 0.0


def _tiny_setup(seed=0):
    model = tiny_model(seed=seed)
    docs = [model.encode_doc(t) for t in TINY_CORPUS]
    queries = [model.encode_query(q) for q in ("goldfish tank", "androgen receptor", "small fish", "signal dose")]
    triples = [TrainingTriple(queries[i % 4], docs[i % 4], docs[(i + 1) % 4]) for i in range(16)]
    val = ValidationSet({f"q{i}": queries[i] for i in range(4)},
                        {f"q{i}": [(f"d{j}", docs[j]) for j in range(4)] for i in range(4)},
                        Qrels({f"q{i}": {f"d{i}": 1} for i in range(4)}))
    return model, triples, val


def test_triple_requires_non_empty_sequences():
    model, triples, _ = _tiny_setup()
    with pytest.raises(TrainingError):
        TrainingTriple(None, triples[0].positive, triples[0].negative)


def test_errors_on_empty_inputs():
    model, triples, val = _tiny_setup()
    with pytest.raises(TrainingError):
        train([], val, model, TrainConfig(batch_size=4))
    with pytest.raises(TrainingError):
        train(triples[:3], val, model, TrainConfig(batch_size=4))
    with pytest.raises(TrainingError):
        train(triples, None, model, TrainConfig(batch_size=4))


def test_validation_query_without_candidates_is_skipped(caplog):
    model, triples, val = _tiny_setup()
    val = ValidationSet(dict(val.queries), {**val.candidates, "q3": []}, val.qrels)
    assert "q3" not in val.queries
    assert "no candidates" in caplog.text


def test_zero_learning_rates_leave_parameters_unchanged():
    model, triples, val = _tiny_setup()
    before = model.params.state()
    train(triples, val, model, TrainConfig(batch_size=4, lr_a=0.0, lr_b=0.0, max_steps=8, validate_every=4))
    after = model.params.state()
    assert all(np.array_equal(before[k], after[k]) for k in before)


def test_loss_trajectory_is_bit_identical_for_a_seed():
    runs = []
    for _ in range(2):
        model, triples, val = _tiny_setup()
        res = train(triples, val, model, TrainConfig(batch_size=4, max_steps=12, validate_every=4, seed=3))
        runs.append((res.losses, res.log_lines))
    assert runs[0] == runs[1]
    model, triples, val = _tiny_setup()
    other = train(triples, val, model, TrainConfig(batch_size=4, max_steps=12, validate_every=4, seed=4))
    assert other.losses != runs[0][0]


def test_log_format_and_best_checkpoint_dominates():
    model, triples, val = _tiny_setup()
    res = train(triples, val, model, TrainConfig(batch_size=4, max_steps=12, validate_every=3, seed=1))
    step_lines = [line for line in res.log_lines if "mrr@10" not in line]
    assert len(step_lines) == 12
    assert step_lines[0].split("\t")[0] == "1" and float(step_lines[0].split("\t")[1]) >= 0
    checks = [line for line in res.log_lines if "mrr@10=" in line]
    assert [int(c.split("\t")[0]) for c in checks] == [3, 6, 9, 12]
    assert res.best_mrr == max(v for _, v in res.validations)


def test_patience_stops_on_strict_drops():
    model, triples, val = _tiny_setup()
    values = iter([0.9, 0.8, 0.7, 0.6, 0.5, 0.4])
    res = train(triples, val, model, TrainConfig(batch_size=4, max_steps=100, validate_every=2, patience=2),
                validate_fn=lambda m: next(values))
    assert res.steps == 6 and res.best_step == 2 and res.best_mrr == 0.9


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_early_stop_best_is_non_decreasing(values):
    class Params:
        def state(self):
            return {}

    stop, seen = EarlyStopState(), []
    for step, v in enumerate(values):
        stop.update(step, v, Params())
        seen.append(stop.best)
    assert seen == sorted(seen)
    assert stop.best == max(values)
