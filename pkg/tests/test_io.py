"""CSV round-trips for grid objects, patterns, and recovered elements."""

import csv

import numpy as np
import pytest

from funclt import (
    GridFunction,
    Kernel,
    MissingnessPattern,
    assemble_partial,
    grid_function_from_csv,
    grid_function_to_csv,
    kernel_from_csv,
    kernel_to_csv,
    mcar_bernoulli,
    sample_element,
    uniform_grid,
)
from funclt.io import (
    partial_element_to_csv,
    patterns_from_csv,
    patterns_to_csv,
    samples_to_csv,
)
from funclt.missingness import pattern_batch
from funclt.rng import substream


@pytest.fixture()
def rng():
    return np.random.default_rng(123)


def test_grid_function_round_trip_is_bit_exact(tmp_path, grid16, rng):
    fn = GridFunction(grid16, rng.standard_normal(16))
    path = tmp_path / "fn.csv"
    grid_function_to_csv(fn, path)
    back = grid_function_from_csv(path)
    assert np.array_equal(back.grid.points, fn.grid.points)
    assert np.array_equal(back.grid.weights, fn.grid.weights)
    assert np.array_equal(back.values, fn.values)


def test_grid_function_header_is_checked(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n0.5,1.0,2.0\n")
    with pytest.raises(ValueError):
        grid_function_from_csv(path)


def test_grid_function_empty_body_is_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("x,weight,value\n")
    with pytest.raises(ValueError):
        grid_function_from_csv(path)


def test_kernel_round_trip_is_bit_exact(tmp_path, grid16, rng):
    values = rng.standard_normal((16, 16))
    kernel = Kernel(grid16, 0.5 * (values + values.T))
    path = tmp_path / "kernel.csv"
    kernel_to_csv(kernel, path)
    back = kernel_from_csv(path, grid16)
    assert np.array_equal(back.values, kernel.values)
    assert back.grid.matches(grid16)


def test_kernel_read_rejects_mismatched_abscissae(tmp_path, grid16, rng):
    kernel = Kernel(grid16, np.eye(16))
    path = tmp_path / "kernel.csv"
    kernel_to_csv(kernel, path)
    with pytest.raises(ValueError):
        kernel_from_csv(path, uniform_grid(32))


def test_kernel_read_rejects_wrong_block_shape(tmp_path, grid16):
    path = tmp_path / "kernel.csv"
    header = ",".join(repr(x) for x in grid16.points)
    path.write_text(header + "\n" + ",".join(["0.0"] * 16) + "\n")
    with pytest.raises(ValueError):
        kernel_from_csv(path, grid16)


def test_kernel_read_rejects_empty_file(tmp_path, grid16):
    path = tmp_path / "kernel.csv"
    path.write_text("")
    with pytest.raises(ValueError):
        kernel_from_csv(path, grid16)


def test_patterns_round_trip_is_bit_exact(tmp_path, grid16, j2_spec):
    prng = substream(5, 4, 1)
    masks = pattern_batch(mcar_bernoulli(0.6), np.zeros((6, 16)), prng)
    patterns = [MissingnessPattern(grid16, m) for m in masks]
    path = tmp_path / "patterns.csv"
    patterns_to_csv(patterns, path)
    back = patterns_from_csv(path, grid16)
    assert len(back) == len(patterns)
    for p, q in zip(patterns, back):
        assert p.same_pattern(q)


def test_patterns_writer_validation(tmp_path, grid16):
    with pytest.raises(ValueError):
        patterns_to_csv([], tmp_path / "never.csv")
    mixed = [
        MissingnessPattern(grid16, np.ones(16, dtype=bool)),
        MissingnessPattern(uniform_grid(32), np.ones(32, dtype=bool)),
    ]
    with pytest.raises(ValueError):
        patterns_to_csv(mixed, tmp_path / "never.csv")
    assert list(tmp_path.iterdir()) == []


def test_patterns_reader_rejects_non_binary_cells(tmp_path, grid16):
    path = tmp_path / "patterns.csv"
    header = ",".join(repr(x) for x in grid16.points)
    body = ",".join(["1"] * 15 + ["2"])
    path.write_text(header + "\n" + body + "\n")
    with pytest.raises(ValueError):
        patterns_from_csv(path, grid16)


def test_patterns_reader_rejects_mismatched_header(tmp_path, grid16):
    path = tmp_path / "patterns.csv"
    patterns_to_csv([MissingnessPattern(grid16, np.ones(16, dtype=bool))], path)
    with pytest.raises(ValueError):
        patterns_from_csv(path, uniform_grid(8))


def test_samples_long_format(tmp_path, j2_spec):
    samples = [sample_element(j2_spec, 4, m, seed=7) for m in (1, 2)]
    path = tmp_path / "samples.csv"
    samples_to_csv(samples, path)
    with open(path, newline="") as fp:
        rows = list(csv.reader(fp))
    assert rows[0] == ["n", "m", "rep", "x", "value"]
    assert len(rows) == 1 + 2 * 16
    first = rows[1]
    assert [int(first[0]), int(first[1]), int(first[2])] == [4, 1, 0]
    assert float(first[3]) == j2_spec.grid.points[0]
    assert float(first[4]) == samples[0].element.values[0]


def test_partial_element_csv_carries_the_mask(tmp_path, grid16, full_rank_spec):
    element = sample_element(full_rank_spec, 4, 1, seed=8).element
    mask = np.zeros(16, dtype=bool)
    mask[::2] = True
    pattern = MissingnessPattern(grid16, mask)
    prior = Kernel(grid16, np.eye(16) * 16.0)
    part = assemble_partial(element, pattern, prior, seed=9)
    path = tmp_path / "partial.csv"
    partial_element_to_csv(part, path)
    with open(path, newline="") as fp:
        rows = list(csv.reader(fp))
    assert rows[0] == ["x", "value", "observed"]
    assert len(rows) == 17
    observed = np.array([int(r[2]) for r in rows[1:]], dtype=bool)
    values = np.array([float(r[1]) for r in rows[1:]])
    assert np.array_equal(observed, mask)
    assert np.array_equal(values, part.assembled.values)


def test_writers_leave_no_temp_files(tmp_path, grid16, rng):
    fn = GridFunction(grid16, rng.standard_normal(16))
    grid_function_to_csv(fn, tmp_path / "fn.csv")
    kernel_to_csv(Kernel(grid16, np.eye(16)), tmp_path / "k.csv")
    patterns_to_csv(
        [MissingnessPattern(grid16, np.ones(16, dtype=bool))], tmp_path / "p.csv"
    )
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fn.csv", "k.csv", "p.csv"]
