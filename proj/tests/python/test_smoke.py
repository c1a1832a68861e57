import math

import pytest

import mirrorsym as ms


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def norm(a):
    return math.sqrt(dot(a, a))


def test_model_factories():
    zoo = [
        (ms.linear_regression(5), 5),
        (ms.hadamard_regression(5), 10),
        (ms.matrix_factorization(3), 18),
        (ms.matrix_factorization(3, residual=True), 18),
        (ms.two_layer_tanh(4), 8),
        (ms.permutation_mlp(4, 2), 12),
        (ms.footnote_quadratic(), 2),
    ]
    for model, dim in zoo:
        assert model.dim == dim
        assert model.name


def test_grad_matches_finite_difference():
    rng = ms.RngStream(11, 0)
    for model in [ms.hadamard_regression(4), ms.two_layer_tanh(3)]:
        sample = model.random_sample(rng)
        theta = [rng.gaussian() for _ in range(model.dim)]
        grad = model.grad(theta, sample)
        fd = ms.fd_gradient(lambda w: model.loss(w, sample), theta)
        assert max(abs(a - b) for a, b in zip(grad, fd)) < 1e-6


def test_mirror_projection_and_tangency():
    model = ms.hadamard_regression(6)
    rng = ms.RngStream(12, 0)
    sym = model.mirrors()[0]
    theta = ms.project_symmetric(sym, [rng.gaussian() for _ in range(model.dim)])
    assert ms.mirror_residual(sym, theta) < 1e-14

    samples = [model.random_sample(rng) for _ in range(8)]
    grad = ms.mean_grad(model, theta, samples)
    assert max(abs(c) for c in sym.frame_coords(grad)) < 1e-10

    report = ms.verify_loss_symmetry(model, sym, 50, rng)
    assert report.passed


def test_gamma_threshold_crossover():
    model = ms.hadamard_regression(6)
    rng = ms.RngStream(13, 0)
    sym = model.mirrors()[0]
    samples = [model.random_sample(rng) for _ in range(16)]
    theta = [rng.gaussian() for _ in range(model.dim)]
    g0 = ms.gamma_threshold(model, sym, theta, samples)
    gamma = 1.01 * max(0.0, g0) + 1e-3
    u = ms.project_symmetric(sym, theta)
    averaged = [(t + r) / 2 for t, r in zip(theta, ms.reflect(sym, theta))]
    assert max(abs(a - b) for a, b in zip(u, averaged)) < 1e-14
    assert ms.regularized_loss(model, u, samples, gamma) < ms.regularized_loss(
        model, theta, samples, gamma
    )


def test_train_is_deterministic():
    model = ms.two_layer_tanh(3)
    data = ms.gen_sparse_regression(1, 30, 0.1, ms.RngStream(14, 0))
    cfg = ms.TrainerConfig()
    cfg.learning_rate = 0.05
    cfg.steps = 300
    cfg.batch_size = 4
    cfg.seed = 21
    runs = [
        ms.train(model, ms.SampleSource.fixed(data), cfg, ms.mirror_residual_metrics(model))
        for _ in range(2)
    ]
    assert runs[0].final_theta == runs[1].final_theta
    assert not runs[0].diverged
    assert runs[0].steps_run == 300


def test_custom_metric_callback():
    model = ms.linear_regression(3)
    data = ms.gen_sparse_regression(3, 20, 0.1, ms.RngStream(15, 0))
    spec = ms.MetricSpec()
    spec.add("norm", lambda w: norm(w))
    ms.add_loss_metric(spec, model, data)
    cfg = ms.TrainerConfig()
    cfg.steps = 50
    cfg.record_every = 10
    traj = ms.train(model, ms.SampleSource.fixed(data), cfg, spec)
    assert traj.metric_names == ["norm", "loss"]
    assert all(len(row.values) == 2 for row in traj.rows)
    assert traj.rows[-1].step == 50


def test_structure_metrics_rank():
    model = ms.matrix_factorization(3)
    rng = ms.RngStream(16, 0)
    data = ms.gen_matfac(3, 20, 0.2, rng)
    theta = [0.0] * model.dim
    metrics = ms.structure_metrics(model, theta, data)
    assert metrics.rank == 0
    assert metrics.sparsity == 1.0


def test_lyapunov_exact_atoms():
    atoms = ms.DiscreteCurvature([2.0, 0.0], [1.0, 1.0])
    rng = ms.RngStream(17, 0)
    low = ms.lyapunov_estimate(atoms, 0.9, 0.0, 0, rng)
    assert low.std_error == 0.0
    assert low.verdict == ms.StabilityVerdict.COLLAPSE
    high = ms.lyapunov_estimate(atoms, 1.9, 0.0, 0, ms.RngStream(17, 1))
    assert high.verdict == ms.StabilityVerdict.ESCAPE
    path = ms.simulate_linearized(atoms, 0.9, 0.0, 1.0, 5000, ms.RngStream(17, 2))
    assert path.collapsed and not path.escaped


def test_dcs_wrapper_round_trip():
    proj = ms.Matrix.identity(3)
    cfg = ms.DcsConfig(proj, 0.05)
    theta = [0.3, -1.2, 0.7]
    params = ms.dcs_embed(theta, cfg)
    realized, constraint = ms.dcs_extract(params, cfg)
    assert max(abs(a - b) for a, b in zip(realized, theta)) < 1e-12
    assert abs(constraint - norm(theta)) < 1e-12

    wrapped = ms.dcs_wrap(ms.linear_regression(3), cfg)
    assert wrapped.dim == 9
    assert wrapped.mirrors()


def test_config_round_trip_and_errors():
    cfg = ms.default_config("lyapunov")
    text = ms.serialize_experiment_config(cfg)
    assert ms.parse_experiment_config(text) == cfg
    with pytest.raises(ms.ConfigError):
        ms.parse_experiment_config("[experiment]\nbogus_key = 1\n")
    with pytest.raises(ms.ConfigError):
        ms.default_config("not_an_experiment")


def test_runners_are_reproducible():
    cfg = ms.default_config("lyapunov")
    assert ms.run_lyapunov(cfg) == ms.run_lyapunov(cfg)

    report = ms.run_verify(ms.default_config("verify"))
    assert report.ok
    assert report.csv.splitlines()[-1]

    csv, ok = ms.run_experiment(cfg)
    assert ok
    assert csv == ms.run_lyapunov(cfg)
