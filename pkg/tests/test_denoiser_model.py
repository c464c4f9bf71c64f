import re
from pathlib import Path

import numpy as np
import pytest

from hdrec.denoiser.model import DenoiserConfig, build_model, forward, parameter_shapes
from hdrec.errors import ParameterError

DOCS_TABLE = Path(__file__).resolve().parents[1] / "docs" / "architecture.md"


def load_published_table():
    shapes = {}
    for line in DOCS_TABLE.read_text().splitlines():
        match = re.match(r"\| *([\w.]+) *\| *([\dx]+) *\|", line)
        if match and match.group(1) != "tensor":
            shapes[match.group(1)] = tuple(int(d) for d in match.group(2).split("x"))
    return shapes


class TestArchitecture:
    def test_default_shapes_match_published_table(self):
        published = load_published_table()
        assert published, "architecture table missing from docs"
        built = parameter_shapes(DenoiserConfig())
        assert list(built) == list(published)
        for name in built:
            assert built[name] == published[name], name

    def test_same_seed_same_parameters(self):
        a = build_model(DenoiserConfig(n_scales=2, base_channels=4, seed=9))
        b = build_model(DenoiserConfig(n_scales=2, base_channels=4, seed=9))
        assert list(a.params) == list(b.params)
        for key in a.params:
            assert np.array_equal(a.params[key], b.params[key])
        assert a.fingerprint == b.fingerprint

    def test_different_seed_different_parameters(self):
        a = build_model(DenoiserConfig(n_scales=2, base_channels=4, seed=9))
        b = build_model(DenoiserConfig(n_scales=2, base_channels=4, seed=10))
        assert not np.array_equal(a.params["head.w"], b.params["head.w"])

    def test_small_config_shape_contract(self):
        weights = build_model(DenoiserConfig(n_scales=2, base_channels=4, seed=0))
        out = forward(weights, np.zeros((32, 32)))
        assert out.shape == (32, 32)

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            DenoiserConfig(n_scales=1)
        with pytest.raises(ParameterError):
            DenoiserConfig(kernel=4)

    def test_parameter_count_matches_published_total(self):
        text = DOCS_TABLE.read_text()
        match = re.search(r"Total: (\d+) tensors, ([\d,]+) parameters", text)
        assert match
        shapes = parameter_shapes(DenoiserConfig())
        assert len(shapes) == int(match.group(1))
        total = sum(int(np.prod(s)) for s in shapes.values())
        assert total == int(match.group(2).replace(",", ""))
