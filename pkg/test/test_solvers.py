# Test type: Unit / statistical / integration
# Validation: Metropolis acceptance, objectives (analytic and optical), beta calibration, annealing traces, GA operators, adiabatic driver, checkerboard convergence.
# Command: uv run pytest test/test_solvers.py -v  (add -m "not slow" to skip the long runs)

import logging
import math

import numpy as np
import pytest

from spim_sim import solvers
from spim_sim.camera import SimClock, measure
from spim_sim.domain import SpinConfig, coupling_norm, fidelity, mattis_hamiltonian, normalize_instance
from spim_sim.errors import DimensionError, GeometryError, InitError
from spim_sim.optics import SlmGeometry, center_intensity, cost, dc_intensity_formula, encode_frame, realized_amplitudes
from spim_sim.oracles import exhaustive_best, gen_instance, karmarkar_karp, random_search_best
from spim_sim.schemas import AdiabaticSchedule, AnnealSchedule, CameraModel, DeviceNoise, GaParams, MhParams
from spim_sim.solvers import MattisObjective, OpticalObjective


def _mattis(n: int = 16, seed: int = 0) -> MattisObjective:
    inst = gen_instance(n, seed=seed)
    spins = SpinConfig.balanced(n, np.random.default_rng(seed)).vector
    return MattisObjective(np.asarray(inst.zeta), spins, zeta=inst.zeta)


# --- Metropolis acceptance ---


def test_downhill_always_accepted_without_draw():
    rng = np.random.default_rng(0)
    state = rng.bit_generator.state
    assert solvers.metropolis_accept(-5.0, 1.0, rng)
    assert solvers.metropolis_accept(0.0, 1.0, rng)
    assert rng.bit_generator.state == state


def test_uphill_rejected_when_cold():
    rng = np.random.default_rng(0)
    assert not any(solvers.metropolis_accept(1.0, 1e9, rng) for _ in range(100))


def test_acceptance_frequency():
    rng = np.random.default_rng(42)
    trials = 100_000
    hits = sum(solvers.metropolis_accept(1.0, 1.0, rng) for _ in range(trials))
    p = math.exp(-1.0)
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(hits / trials - p) <= 3 * se


# --- Objectives ---


def test_mh_step_rejection_restores_state():
    obj = MattisObjective(np.ones(16), SpinConfig.balanced(16, np.random.default_rng(1)).vector)
    spins = obj.spins.copy()
    accepted, delta = solvers.mh_step(obj, [3], 1e9, np.random.default_rng(0))
    assert not accepted
    assert delta == 4.0
    assert np.array_equal(obj.spins, spins)
    assert obj.value == 0.0


def test_mh_step_accepts_downhill():
    obj = MattisObjective(np.ones(16), np.ones(16, dtype=np.int8))
    accepted, delta = solvers.mh_step(obj, [3], 1e9, np.random.default_rng(0))
    assert accepted
    assert delta == 196.0 - 256.0
    assert obj.spins[3] == -1
    assert obj.value == 196.0


def test_mattis_value_tracks_hamiltonian():
    inst = gen_instance(36, seed=4)
    obj = MattisObjective(np.asarray(inst.zeta), SpinConfig.balanced(36, np.random.default_rng(4)).vector, zeta=inst.zeta)
    solvers.anneal(obj, AnnealSchedule(total_iterations=2000), MhParams(seed=4))
    assert obj.value == pytest.approx(mattis_hamiltonian(inst, obj.spins), rel=1e-9, abs=1e-12)
    assert obj.fidelity() == pytest.approx(math.sqrt(obj.value / coupling_norm(inst)), rel=1e-9, abs=1e-12)


def test_mattis_evaluate_leaves_state():
    obj = _mattis()
    spins, value = obj.spins.copy(), obj.value
    assert obj.evaluate(-spins) == pytest.approx(value, rel=1e-12, abs=1e-15)
    assert np.array_equal(obj.spins, spins)
    assert obj.evaluations == 1


def test_optical_rejection_restores_field():
    g = SlmGeometry(2, 4)
    obj = OpticalObjective(g, np.ones(4), np.array([1, -1, -1, 1]), roi=1)
    before = obj._field_in.copy()
    accepted, _ = solvers.mh_step(obj, [0], 1e9, np.random.default_rng(0))
    assert not accepted
    assert np.array_equal(obj._field_in, before)


def test_optical_dc_objective_matches_formula():
    rng = np.random.default_rng(5)
    g = SlmGeometry(4, 4)
    amps = rng.uniform(0.2, 1.0, 16)
    obj = OpticalObjective(g, amps, rng.choice([-1, 1], 16), roi=1)
    realized = realized_amplitudes(np.arccos(amps))
    for _ in range(50):
        solvers.mh_step(obj, [int(rng.integers(16))], 1e-12, rng)
    cfg = SpinConfig(obj.spins.reshape(4, 4))
    assert obj.value == pytest.approx(dc_intensity_formula(cfg, realized, 4), rel=1e-9, abs=1e-6)
    assert obj.value == pytest.approx(center_intensity(encode_frame(cfg, amps, g), roi=1), rel=1e-9, abs=1e-6)


def test_optical_objective_validation():
    g = SlmGeometry(2, 4)
    with pytest.raises(GeometryError):
        OpticalObjective(g, np.ones(4), np.ones(4), roi=g.frame_side + 2)
    with pytest.raises(DimensionError):
        OpticalObjective(g, np.ones(4), np.ones(4), kind="full-image-cost", roi=1)
    with pytest.raises(DimensionError):
        OpticalObjective(g, np.ones(4), np.ones(4), kind="full-image-cost", roi=1, target=np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        OpticalObjective(g, np.ones(9), np.ones(9))


def test_full_image_cost_ignores_roi():
    g = SlmGeometry(4, 8)
    obj = OpticalObjective(g, np.ones(16), np.ones(16), kind="full-image-cost", target=np.zeros((24, 24)))
    assert obj.window == 24
    assert obj.value == pytest.approx(cost(obj.current_image(), np.zeros((24, 24))))
    assert solvers.checkerboard_problem(spins_per_side=16, pixels_per_spin=4, camera=False).window == 48


def test_objective_factory_geometry_checks():
    inst = gen_instance(20)
    with pytest.raises(GeometryError):
        solvers.objective_factory_for(inst, "camera")
    inst = gen_instance(16)
    with pytest.raises(GeometryError):
        solvers.objective_factory_for(inst, "camera", spins_per_side=5)
    make = solvers.objective_factory_for(inst, "camera", roi=8)
    obj = make(np.ones(16), SpinConfig.balanced(16, np.random.default_rng(0)).vector)
    assert obj.camera.exposure_gain != 1.0
    assert isinstance(solvers.objective_factory_for(inst, "fast")(np.ones(16), np.ones(16)), MattisObjective)


# --- Proposals & beta ---


def test_flip_proposer_distinct_and_capped():
    rng = np.random.default_rng(0)
    proposer = solvers.FlipProposer(10, 3, rng)
    for _ in range(20):
        picked = proposer.next()
        assert len(set(picked.tolist())) == 3
        assert all(0 <= i < 10 for i in picked)
    assert solvers.FlipProposer(5, 10, rng).d == 5
    assert solvers.FlipProposer(5, 0, rng).d == 1


def test_flip_proposer_sweeps_every_spin():
    proposer = solvers.FlipProposer(12, 1, np.random.default_rng(3))
    assert sorted(int(proposer.next()[0]) for _ in range(12)) == list(range(12))


def test_flips_per_proposal_default():
    assert MhParams().flips_for(64) == 1
    assert MhParams().flips_for(16384) == 16
    assert MhParams(d=4).flips_for(2) == 2


def test_beta_schedules():
    geo = solvers.beta_schedule(0.1, 10.0, 5)
    assert geo[0] == pytest.approx(0.1) and geo[-1] == pytest.approx(10.0)
    assert geo[2] == pytest.approx(1.0)
    lin = solvers.beta_schedule(1.0, 3.0, 3, "linear")
    assert list(lin) == [1.0, 2.0, 3.0]
    assert solvers.beta_schedule(1.0, 2.0, 0).size == 0
    assert list(solvers.beta_schedule(1.0, 2.0, 1)) == [1.0]


def test_calibrate_beta_equal_moves():
    obj = MattisObjective(np.ones(16), SpinConfig.balanced(16, np.random.default_rng(0)).vector)
    proposer = solvers.FlipProposer(16, 1, np.random.default_rng(0))
    start, end = solvers.calibrate_beta(obj, proposer, AnnealSchedule())
    assert start == pytest.approx(math.log(2) / 4)
    assert end == pytest.approx(math.log(100) / 4)
    assert obj.value == 0.0


def test_calibrate_beta_keeps_explicit_endpoints():
    obj = _mattis()
    proposer = solvers.FlipProposer(16, 1, np.random.default_rng(0))
    assert solvers.calibrate_beta(obj, proposer, AnnealSchedule(beta_start=0.5, beta_end=2.0)) == (0.5, 2.0)
    assert obj.evaluations == 0


def test_calibrate_beta_flat_objective_warns(caplog):
    obj = MattisObjective(np.zeros(8), np.ones(8, dtype=np.int8))
    proposer = solvers.FlipProposer(8, 1, np.random.default_rng(0))
    with caplog.at_level(logging.WARNING):
        assert solvers.calibrate_beta(obj, proposer, AnnealSchedule()) == (1.0, 1.0)
    assert "no probe changed the objective" in caplog.text


# --- Annealing traces ---


def test_zero_iterations_trace():
    trace = solvers.anneal(_mattis(), AnnealSchedule(total_iterations=0), MhParams())
    assert len(trace) == 1
    assert trace.iterations == 0
    assert trace.cost_ratio() == 1.0


def test_anneal_is_deterministic():
    a = solvers.anneal(_mattis(seed=2), AnnealSchedule(total_iterations=300), MhParams(seed=9))
    b = solvers.anneal(_mattis(seed=2), AnnealSchedule(total_iterations=300), MhParams(seed=9))
    assert a.objective == b.objective
    assert a.accepted == b.accepted
    assert np.array_equal(a.best_spins, b.best_spins)


def test_anneal_trace_shape():
    trace = solvers.anneal(_mattis(), AnnealSchedule(total_iterations=200), MhParams(), clock=SimClock())
    assert len(trace) == 201
    assert trace.iteration == list(range(201))
    assert trace.total_sim_time_ms == 200 * 270
    assert trace.best_fidelity == np.nanmin(trace.fidelity)
    assert trace.beta[1] <= trace.beta[-1]


def test_trace_csv(tmp_path):
    trace = solvers.anneal(_mattis(), AnnealSchedule(total_iterations=5), MhParams())
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# spim-sim trace schema v1"
    assert lines[1] == "iteration,t_step,beta,objective,fidelity,accepted,sim_time_ms"
    assert len(lines) == 2 + 6
    assert lines[2].split(",")[5] == "0"


def test_converged_anneal_rejects_more_than_it_accepts():
    trace = solvers.anneal(_mattis(64, seed=2), AnnealSchedule(total_iterations=4000), MhParams(seed=2))
    half = len(trace) // 2
    accepted = trace.accepted_count(half)
    assert 0 < accepted <= len(trace) - half - accepted
    assert trace.accepted_count() == sum(trace.accepted)


# --- Genetic algorithm ---


def test_mutation_rate_statistic():
    rng = np.random.default_rng(0)
    genes = np.ones(256, dtype=np.int8)
    flips = [solvers.mutate(genes, 0.05, rng)[1] for _ in range(10_000)]
    assert np.mean(flips) == pytest.approx(0.05 * 256, rel=0.05)
    assert np.all(genes == 1)


def test_mutation_counts_match_genes():
    rng = np.random.default_rng(1)
    genes = np.ones(64, dtype=np.int8)
    child, flips = solvers.mutate(genes, 0.3, rng)
    assert int((child == -1).sum()) == flips


def test_crossover_identical_parents():
    rng = np.random.default_rng(0)
    parent = np.random.default_rng(5).choice(np.array([-1, 1], dtype=np.int8), 40)
    child = solvers.uniform_crossover(parent, parent.copy(), rng)
    assert np.array_equal(child, parent)
    unchanged, flips = solvers.mutate(child, 0.0, rng)
    assert flips == 0 and np.array_equal(unchanged, parent)


def test_crossover_mixes_parents():
    rng = np.random.default_rng(0)
    a = np.ones(200, dtype=np.int8)
    child = solvers.uniform_crossover(a, -a, rng)
    assert 60 < int((child == 1).sum()) < 140


def test_select_parents_skips_worst():
    rng = np.random.default_rng(0)
    costs = np.array([1.0, 2.0, 10.0])
    picks = [solvers.select_parents(costs, rng) for _ in range(1000)]
    assert all(2 not in pair for pair in picks)
    tied = solvers.select_parents(np.full(4, 3.0), rng)
    assert all(0 <= i < 4 for i in tied)


def test_ga_budget():
    assert solvers.ga_generations_for_budget(1500, GaParams()) == 98
    assert solvers.ga_generations_for_budget(10, GaParams()) == 0


def test_ga_trace_counts_evaluations():
    obj = _mattis(16, seed=3)
    params = GaParams(seed=3)
    trace = solvers.ga_evolve(obj, params, solvers.ga_generations_for_budget(100, params))
    assert len(trace) == 6
    assert trace.iteration[0] == 16
    assert trace.iteration[-1] == 16 + 5 * 15
    assert all(b <= a for a, b in zip(trace.objective, trace.objective[1:]))
    assert trace.evaluations == trace.iteration[-1]


def test_ga_leaves_objective_on_best_individual():
    obj = solvers.checkerboard_problem(seed=3, spins_per_side=4, pixels_per_spin=8, camera=False)
    trace = solvers.ga_evolve(obj, GaParams(seed=3), 10)
    assert obj.value == trace.objective[-1]
    assert trace.objective[-1] == trace.best_objective
    field_in = encode_frame(SpinConfig(obj.spins.reshape(4, 4)), np.ones(16), SlmGeometry(4, 8)).field()
    expected = measure(field_in, None, DeviceNoise(), 0, 24).data
    assert np.allclose(obj.current_image(), expected)
    assert cost(obj.current_image(), obj.target) == pytest.approx(trace.objective[-1])


# --- Adiabatic driver ---


def test_stage_plan_defaults():
    sched = AdiabaticSchedule()
    plan = solvers.stage_plan(sched, 2000, 64)
    assert len(plan) == 65
    assert sum(plan) == 2080
    assert sum(solvers.stage_plan(sched, 2000, 16384)) == 65 * 256
    assert solvers.stage_plan(AdiabaticSchedule(total_steps=4, settle_iterations=10), 100, 16)[-1] == 60


def test_adiabatic_runtime_matches_hardware_budget():
    inst = gen_instance(64, seed=1)
    trace = solvers.adiabatic_solve(inst, AdiabaticSchedule(), AnnealSchedule(), MhParams(seed=1))
    assert trace.iterations == 2080
    assert trace.total_sim_time_ms == pytest.approx(2080 * 270)
    assert 0.8 * 9 * 60_000 <= trace.total_sim_time_ms <= 1.2 * 9 * 60_000
    assert len(trace.stage_jumps) == 64
    assert 0 <= trace.best_fidelity < 1e-2


def test_adiabatic_equal_numbers_start_perfect():
    inst = normalize_instance([1.0] * 16)
    trace = solvers.adiabatic_solve(
        inst, AdiabaticSchedule(total_steps=4), AnnealSchedule(total_iterations=50), MhParams()
    )
    assert trace.fidelity[0] == 0.0
    assert trace.best_fidelity == 0.0


def test_adiabatic_rejects_unbalanced_start():
    inst = gen_instance(16)
    with pytest.raises(InitError):
        solvers.adiabatic_solve(inst, AdiabaticSchedule(), AnnealSchedule(), MhParams(), start=np.ones(16))
    with pytest.raises(DimensionError):
        solvers.adiabatic_solve(inst, AdiabaticSchedule(), AnnealSchedule(), MhParams(), start=np.ones(4))


def test_adiabatic_odd_size():
    inst = gen_instance(7, seed=2)
    trace = solvers.adiabatic_solve(
        inst, AdiabaticSchedule(total_steps=4, settle_iterations=8), AnnealSchedule(total_iterations=40), MhParams()
    )
    start = SpinConfig.balanced(7, np.random.default_rng(0)).vector
    assert abs(int(start.astype(int).sum())) == 1
    assert trace.fidelity[0] == pytest.approx(fidelity(inst, start), rel=1e-12, abs=1e-15)
    assert trace.best_fidelity >= exhaustive_best(inst)[1] - 1e-15


def test_fast_objective_proportional_to_fidelity_at_final_step():
    inst = gen_instance(64, seed=6)
    sched = AdiabaticSchedule(total_steps=8)
    trace = solvers.adiabatic_solve(inst, sched, AnnealSchedule(total_iterations=400), MhParams(seed=6))
    norm = coupling_norm(inst)
    final = [(v, f) for v, f, t in zip(trace.objective, trace.fidelity, trace.t_step) if t == 8]
    assert final
    for value, eta in final:
        assert value == pytest.approx(eta * eta * norm, rel=1e-9, abs=1e-15)


def test_adiabatic_beats_small_random_search():
    mh, rs = [], []
    for seed in range(5):
        inst = gen_instance(16, seed=seed)
        trace = solvers.adiabatic_solve(inst, AdiabaticSchedule(), AnnealSchedule(), MhParams(seed=seed))
        assert trace.best_fidelity >= exhaustive_best(inst)[1] - 1e-15
        mh.append(trace.best_fidelity)
        rs.append(random_search_best(inst, 20, seed=seed)[1])
    assert np.median(mh) <= np.median(rs)


def test_exhaustive_dominates_solver_and_karmarkar_karp():
    hits_at_eight = 0
    for k in range(50):
        n = (8, 12, 16, 20)[k % 4]
        inst = gen_instance(n, seed=100 + k)
        _, exact = exhaustive_best(inst)
        trace = solvers.adiabatic_solve(inst, AdiabaticSchedule(), AnnealSchedule(), MhParams(seed=k))
        assert trace.best_fidelity >= exact - 1e-15
        assert karmarkar_karp(inst)[1] >= exact - 1e-15
        if n == 8 and trace.best_fidelity == pytest.approx(exact, rel=1e-9, abs=1e-15):
            hits_at_eight += 1
    assert hits_at_eight >= 0.6 * 13


def _stage_dips(n: int, pixels_per_spin: int, steps: int, settle: int, seed: int = 0) -> list:
    inst = gen_instance(n, seed=seed)
    geometry = SlmGeometry(math.isqrt(n), pixels_per_spin)
    make = solvers.optical_factory(inst, geometry, roi=geometry.frame_side // 4)
    trace = solvers.adiabatic_solve(
        inst,
        AdiabaticSchedule(total_steps=steps, settle_iterations=settle),
        AnnealSchedule(total_iterations=0),
        MhParams(seed=seed),
        make_objective=make,
    )
    return trace.stage_jumps


def test_optical_cost_dips_at_each_step():
    jumps = _stage_dips(64, 8, steps=8, settle=16)
    assert len(jumps) == 8
    assert sum(after < before for _, before, after in jumps) >= 0.75 * len(jumps)


@pytest.mark.slow
def test_large_instance_dips_at_each_step():
    jumps = _stage_dips(16384, 4, steps=8, settle=32)
    assert sum(after < before for _, before, after in jumps) >= 0.75 * len(jumps)


# --- Checkerboard ---


def test_checkerboard_problem_layout():
    obj = solvers.checkerboard_problem(seed=0, spins_per_side=4, pixels_per_spin=8)
    g = SlmGeometry(4, 8)
    assert obj.kind == "full-image-cost"
    assert obj.target.shape == (g.sensor_window, g.sensor_window)
    assert obj.target.max() == 255
    assert obj.value > 0


def test_checkerboard_small_run_improves():
    obj = solvers.checkerboard_problem(seed=1, spins_per_side=4, pixels_per_spin=8)
    trace = solvers.anneal(obj, AnnealSchedule(total_iterations=400), MhParams(d=1, seed=1))
    assert trace.objective[-1] < trace.objective[0]
    assert trace.cost_ratio() < 0.5


def test_checkerboard_keeps_camera_noise():
    noisy = solvers.checkerboard_problem(
        seed=1, spins_per_side=4, pixels_per_spin=8, camera_model=CameraModel(read_noise_sigma=2.0, seed=1)
    )
    assert noisy.camera.read_noise_sigma == 2.0
    assert noisy.camera.exposure_gain != 1.0
    assert noisy.evaluate(noisy.spins) != noisy.evaluate(noisy.spins)

    quiet = solvers.checkerboard_problem(seed=1, spins_per_side=4, pixels_per_spin=8, camera_model=CameraModel())
    assert quiet.evaluate(quiet.spins) == quiet.evaluate(quiet.spins)


@pytest.mark.slow
def test_checkerboard_mh_converges():
    for seed in range(5):
        obj = solvers.checkerboard_problem(seed=seed)
        trace = solvers.anneal(obj, AnnealSchedule(total_iterations=1500), MhParams(d=1, seed=seed))
        assert trace.cost_ratio() <= 0.05, f"seed {seed}"


@pytest.mark.slow
def test_checkerboard_mh_beats_ga():
    wins = 0
    for seed in range(5):
        params = GaParams(seed=seed)
        ga = solvers.ga_evolve(
            solvers.checkerboard_problem(seed=seed), params, solvers.ga_generations_for_budget(1500, params)
        )
        mh = solvers.anneal(
            solvers.checkerboard_problem(seed=seed), AnnealSchedule(total_iterations=1500), MhParams(d=1, seed=seed)
        )
        wins += ga.cost_ratio() >= 2 * mh.cost_ratio()
    assert wins >= 4
