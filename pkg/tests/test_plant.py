import numpy as np
import pytest
from scipy.integrate import solve_ivp

from narxnas.plant import (ROD_MAX, ROD_MIN, ROD_NOMINAL, DatasetError, Dataset, PlantError,
                           SurrogatePlantParams, bundled_dataset, calibrate_rod_curve,
                           generate_dataset, load_csv, save_csv, schedule_samples)


def test_rod_curve_calibration():
    a, k = calibrate_rod_curve()
    half = ROD_NOMINAL - ROD_MIN
    assert 1 + a * (1 - np.exp(-k * half)) == pytest.approx(1.184, abs=1e-12)
    assert 1 + a * (1 - np.exp(k * half)) == pytest.approx(0.0, abs=1e-12)
    p = SurrogatePlantParams()
    assert p.steady_power(ROD_MAX) == pytest.approx(1.184, abs=1e-12)
    assert p.steady_power(ROD_MIN) == pytest.approx(0.0, abs=1e-12)
    assert p.steady_power(ROD_NOMINAL) == 1.0


def test_nominal_equilibrium():
    ds = bundled_dataset("nominal", duration=500)
    assert np.max(np.abs(ds.targets - 1.0)) <= 1e-6


@pytest.mark.parametrize("name", ["learning", "verification1", "verification2"])
def test_schedules_stay_in_range(name):
    ds = bundled_dataset(name)
    assert len(ds) == 3000
    assert ds.targets.min() >= 0 and ds.targets.max() <= 1.184
    assert ds.inputs.min() >= ROD_MIN and ds.inputs.max() <= ROD_MAX


def _reference_step(z, duration):
    """Independent adaptive-step solution of the same equations."""
    p = SurrogatePlantParams()
    rho_rod = p.rod_worth * (1 - np.exp(-p.rod_curvature * (z - p.rod_nominal)))

    def f(t, s):
        n, c, th = s
        rho = rho_rod - p.alpha_t * th
        return [((rho - p.beta) * n + p.beta * c) / p.generation_time,
                p.decay_const * (n - c), (n - 1 - th) / p.tau_th]

    t = np.arange(1, duration + 1, dtype=float)
    sol = solve_ivp(f, (0, duration), [1.0, 1.0, 0.0], method="Radau", t_eval=t,
                    rtol=1e-10, atol=1e-12)
    return sol.y[0]


@pytest.mark.parametrize("z", [-0.9, -1.3])
def test_step_response_matches_reference(z):
    ds = generate_dataset(SurrogatePlantParams(), [(0, z)], 200)
    ref = _reference_step(z, 200)
    assert np.max(np.abs(ds.targets - ref)) < 1e-6
    # monotone approach to the new steady state after the prompt jump
    steady = SurrogatePlantParams().steady_power(z)
    tail = ds.targets[5:]
    assert abs(tail[-1] - steady) < abs(tail[0] - steady)


def test_schedule_expansion():
    z = schedule_samples([(2, -1.0), (4, -1.5)], 6, 1.0, -1.098)
    assert z.tolist() == [-1.098, -1.098, -1.0, -1.0, -1.5, -1.5]


def test_rod_range_enforced():
    with pytest.raises(ValueError):
        generate_dataset(SurrogatePlantParams(), [(10, 0.5)], 50)


def test_power_limit():
    params = SurrogatePlantParams(alpha_t=0.0, power_limit=2.0)
    with pytest.raises(PlantError):
        generate_dataset(params, [(0, -0.5)], 400)


def test_noise_is_seeded():
    p = SurrogatePlantParams()
    a = generate_dataset(p, [(5, -1.2)], 50, rng=np.random.default_rng(1), noise_std=0.01)
    b = generate_dataset(p, [(5, -1.2)], 50, rng=np.random.default_rng(1), noise_std=0.01)
    assert np.array_equal(a.targets, b.targets)


def test_csv_round_trip(tmp_path):
    ds = bundled_dataset("verification1", duration=50)
    path = tmp_path / "v.csv"
    save_csv(ds, path)
    back = load_csv(path)
    assert np.array_equal(back.inputs, ds.inputs) and np.array_equal(back.targets, ds.targets)
    assert back.nominal_input == ds.nominal_input and back.nominal_output == ds.nominal_output


def test_csv_without_metadata(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("-1.0,1.0\n-1.1,0.9\n")
    ds = load_csv(path)
    assert len(ds) == 2 and ds.nominal_input == ROD_NOMINAL


@pytest.mark.parametrize("bad_line,message", [("1.0", "expected 2 columns"),
                                               ("1.0,abc", "malformed number"),
                                               ("1.0,nan", "non-finite")])
def test_csv_errors_name_the_line(tmp_path, bad_line, message):
    rows = ["# nominal_input=-1.098", "u,y"] + ["-1.0,1.0"] * 4 + [bad_line]
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(DatasetError, match=rf"bad.csv:7: {message}"):
        load_csv(path)


def test_csv_header_and_empty(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("time,power\n1,2\n")
    with pytest.raises(DatasetError, match="h.csv:1"):
        load_csv(path)
    path.write_text("u,y\n")
    with pytest.raises(DatasetError, match="no data rows"):
        load_csv(path)


def test_dataset_validation():
    with pytest.raises(DatasetError):
        Dataset([1.0, 2.0], [1.0])
    with pytest.raises(DatasetError):
        Dataset([], [])
    with pytest.raises(DatasetError):
        Dataset([1.0], [1.0], sample_period=0)
