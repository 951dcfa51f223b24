import json

import numpy as np
import pytest

from mccm.errors import DomainError
from mccm.io import (
    decode_model,
    decode_table,
    dumps,
    encode_model,
    encode_plan,
    encode_table,
    model_hash,
)
from mccm.model import Assortment, generate_random
from mccm.oracle import exact_table
from mccm.plan import build_plan


def test_model_file_layout():
    model = generate_random(4, 0.2, seed=3)
    data = json.loads(encode_model(model))
    assert set(data) == {"n", "lambda", "rho"}
    assert data["n"] == 4 and len(data["lambda"]) == 5 and len(data["rho"]) == 5


def test_floats_have_17_digits():
    assert dumps(1 / 3) == "0.33333333333333331"
    assert float(dumps(0.1)) == 0.1


def test_table_round_trip_and_order():
    model = generate_random(5, 0.2, seed=3)
    plan = build_plan(5, 2)
    table = exact_table(model, reversed(plan.required_assortments))
    text = encode_table(table)
    back = decode_table(text, n=5)
    assert list(back) == sorted(plan.required_assortments)
    for S in table:
        np.testing.assert_array_equal(back[S], table[S])
    first = json.loads(text.splitlines()[0])
    assert first["S"] == [1, 2] and set(first["pi"]) == {"0", "1", "2"}


def test_table_infers_n():
    table = exact_table(generate_random(4, 0.0, 1), [Assortment([1, 3])])
    assert decode_table(encode_table(table)).n == 3


@pytest.mark.parametrize(
    "line",
    [
        '{"S": [1, 2], "pi": {"0": 0.5, "1": 0.5}}',
        '{"S": [1, 2], "pi": {"0": 0.2, "1": 0.3, "2": 0.5, "3": 0.0}}',
        '{"S": [1, 2], "pi": {"0": 0.2, "1": 0.3, "2": 0.6}}',
        '{"S": [1, 2], "pi": {"0": 0.2, "1": 0.3',
    ],
)
def test_bad_records(line):
    with pytest.raises(DomainError):
        decode_table(line + "\n")


def test_duplicate_record():
    line = '{"S": [1], "pi": {"0": 0.5, "1": 0.5}}\n'
    with pytest.raises(DomainError):
        decode_table(line * 2)


def test_bad_model_text():
    with pytest.raises(DomainError):
        decode_model("{not json")
    with pytest.raises(DomainError):
        decode_model('{"n": 3, "lambda": [1, 0, 0, 0]}')


def test_renormalize_on_read():
    text = '{"n": 3, "lambda": [0, 1, 1, 2], "rho": [[1,0,0,0],[0,0,1,1],[0,2,0,2],[0,1,3,0]]}'
    model = decode_model(text, renormalize=True)
    np.testing.assert_allclose(model.lam, [0, 0.25, 0.25, 0.5])
    np.testing.assert_allclose(model.rho[3], [0, 0.25, 0.75, 0])


def test_model_hash_stable():
    a = generate_random(5, 0.2, seed=1)
    assert model_hash(a) == model_hash(decode_model(encode_model(a)))
    assert model_hash(a) != model_hash(generate_random(5, 0.2, seed=2))


def test_plan_text():
    text = encode_plan(build_plan(4, 2))
    lines = text.splitlines()
    assert lines[0] == "# n=4 r=2 mode=minimal count_r=5 count_r_plus_1=4 total=9"
    assert [json.loads(x) for x in lines[1:3]] == [[1, 2], [1, 3]]
    assert len(lines) == 10
