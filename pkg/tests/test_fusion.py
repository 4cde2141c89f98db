import numpy as np
import pytest

from gocoma import autodiff as ad
from gocoma import geometry as geo
from gocoma.errors import InvalidInputError
from gocoma.fusion import (
    GcsaConfig,
    XAttnParams,
    aggregate,
    attention_scores,
    baseline_concat,
    baseline_euclid_xattn,
    baseline_mobius_fuse,
    compute_qkv,
    gcsa_backward,
    gcsa_forward,
    init_params,
    init_xattn_params,
    lift,
    load_checkpoint,
    pool_and_fuse,
    save_checkpoint,
)
from gocoma.fusion import diffgeo

from oracles import central_diff, gcs_1d, mobius_fold_1d, rel_err

RNG = np.random.default_rng(20240819)


def ball_pts(shape, c, scale=0.3, rng=RNG):
    return geo.exp0(rng.normal(size=shape) * scale, c)


class TestDiffgeoParity:
    """The tensor twins must reproduce the numpy module bit for bit."""

    @pytest.mark.parametrize("c", [0.1, 0.5, 1.0, 2.0])
    def test_all_ops(self, c):
        rng = np.random.default_rng(int(c * 1000))
        for _ in range(25):
            v = rng.normal(size=(4, 5)) * rng.uniform(0.1, 2.0)
            x = geo.exp0(v, c)
            y = ball_pts((4, 5), c, rng=rng)
            r = rng.normal(size=(4, 1))
            W = rng.normal(size=(3, 5)) * 0.5
            assert np.array_equal(geo.exp0(v, c), diffgeo.exp0(v, c).data)
            assert np.array_equal(geo.log0(x, c), diffgeo.log0(x, c).data)
            assert np.array_equal(
                geo.mobius_add(x, y, c), diffgeo.mobius_add(x, y, c).data
            )
            assert np.array_equal(
                geo.mobius_scalar_mul(r, x, c), diffgeo.mobius_scalar_mul(r, x, c).data
            )
            assert np.array_equal(
                geo.mobius_matvec(W, x, c), diffgeo.mobius_matvec(W, x, c).data
            )
            assert np.array_equal(
                geo.geodesic_dist(x, y, c),
                diffgeo.geodesic_dist(x, y, c).data[..., 0],
            )
            assert np.array_equal(
                geo.gcs(x, y, c), diffgeo.gcs(x, y, c).data[..., 0]
            )

    def test_gradients_match_fd(self):
        v = RNG.normal(size=(2, 3)) * 0.4
        y = ball_pts((2, 3), 1.0)

        def loss_fn(arr):
            t = ad.Tensor(arr, requires_grad=True)
            out = diffgeo.mobius_add(diffgeo.exp0(t, 1.0), y, 1.0)
            return t, ad.sum_(out * out)

        t, loss = loss_fn(v)
        loss.backward()
        num = central_diff(lambda a: float(loss_fn(a)[1].data), v.copy(), h=1e-6)
        assert rel_err(t.grad, num) < 1e-6


class TestLift:
    def test_zeros_to_origin(self):
        s = lift(np.zeros((3, 4)), 1.0)
        assert np.array_equal(s.tokens.data, np.zeros((3, 4)))

    def test_single_vector_oracle(self):
        s = lift(np.array([[0.5, 0.0]]), 1.0)
        np.testing.assert_allclose(s.tokens.data, [[0.46211715726000976, 0.0]], atol=1e-15)

    def test_roundtrip_with_prescale(self):
        x = RNG.normal(size=(4, 6)) * 2.0
        s = lift(x, 1.0, pre_scale=4.0)
        rec = geo.log0(s.tokens.data, 1.0) * 4.0
        assert np.max(np.abs(rec - x)) < 1e-8

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            lift(np.zeros((0, 4)), 1.0)
        with pytest.raises(InvalidInputError):
            lift(np.zeros(4), 1.0)

    def test_bad_prescale(self):
        with pytest.raises(InvalidInputError):
            lift(np.zeros((1, 4)), 1.0, pre_scale=0.0)


class TestComputeQkv:
    def test_identity_params(self):
        cfg = GcsaConfig(d_model=4)
        p = init_params(4, 4, cfg, seed=0)
        p.W_Q.data[:] = np.eye(4)
        p.W_K.data[:] = np.eye(4)
        p.W_V.data[:] = np.eye(4)
        code = lift(RNG.normal(size=(2, 4)) * 0.3, 1.0, "code")
        img = lift(RNG.normal(size=(3, 4)) * 0.3, 1.0, "image")
        q, k, v = compute_qkv(code, img, p)
        assert np.max(np.abs(q.tokens.data - code.tokens.data)) < 1e-9
        assert np.max(np.abs(k.tokens.data - img.tokens.data)) < 1e-9
        assert np.max(np.abs(v.tokens.data - img.tokens.data)) < 1e-9

    def test_zero_weights_give_biases(self):
        cfg = GcsaConfig(d_model=3)
        p = init_params(4, 5, cfg, seed=0)
        p.W_Q.data[:] = 0.0
        p.W_K.data[:] = 0.0
        p.W_V.data[:] = 0.0
        p.b_Q_t.data[:] = [0.1, 0.0, 0.0]
        p.b_K_t.data[:] = [0.0, 0.2, 0.0]
        p.b_V_t.data[:] = [0.0, 0.0, 0.3]
        code = lift(RNG.normal(size=(2, 4)) * 0.3, 1.0)
        img = lift(RNG.normal(size=(3, 5)) * 0.3, 1.0)
        q, k, v = compute_qkv(code, img, p)
        for seq, b_t in ((q, p.b_Q_t), (k, p.b_K_t), (v, p.b_V_t)):
            expect = geo.exp0(b_t.data, 1.0)
            assert np.max(np.abs(seq.tokens.data - expect)) < 1e-12

    def test_matches_handcomposed_mobius_linear(self):
        cfg = GcsaConfig(d_model=4)
        p = init_params(4, 4, cfg, seed=3)
        p.b_Q_t.data[:] = RNG.normal(size=4) * 0.2
        code = lift(RNG.normal(size=(2, 4)) * 0.3, 1.0)
        img = lift(RNG.normal(size=(3, 4)) * 0.3, 1.0)
        q, _, _ = compute_qkv(code, img, p)
        b_q = geo.exp0(p.b_Q_t.data, 1.0)
        whole_seq = geo.mobius_linear(p.W_Q.data, b_q, code.tokens.data, 1.0)
        assert np.array_equal(q.tokens.data, whole_seq)
        # tokenwise loop hits a different BLAS kernel; equal to fp noise only
        per_token = np.stack(
            [geo.mobius_linear(p.W_Q.data, b_q, tok, 1.0) for tok in code.tokens.data]
        )
        assert np.max(np.abs(q.tokens.data - per_token)) < 1e-12

    def test_shape_mismatch(self):
        cfg = GcsaConfig(d_model=4)
        p = init_params(4, 5, cfg, seed=0)
        code = lift(np.zeros((2, 5)), 1.0)
        img = lift(np.zeros((2, 5)), 1.0)
        with pytest.raises(InvalidInputError):
            compute_qkv(code, img, p)


class TestAttentionScores:
    def test_equal_tokens_give_lambda(self):
        pts = ball_pts((3, 4), 1.0)
        q = diffgeo_seq(pts)
        s = attention_scores(q, diffgeo_seq(pts), 1.7)
        np.testing.assert_allclose(np.diag(s.s_code_img.data), 1.7, atol=1e-9)

    def test_zero_lambda(self):
        q = diffgeo_seq(ball_pts((2, 3), 1.0))
        k = diffgeo_seq(ball_pts((4, 3), 1.0))
        s = attention_scores(q, k, 0.0)
        assert np.array_equal(s.s_code_img.data, np.zeros((2, 4)))

    def test_single_pair_oracle(self):
        q = diffgeo_seq(np.zeros((1, 2)))
        k = diffgeo_seq(np.array([[0.5, 0.0]]))
        s = attention_scores(q, k, 2.0)
        expect = 2.0 * gcs_1d(0.0, 0.5)
        np.testing.assert_allclose(s.s_code_img.data, [[expect]], atol=1e-12)
        np.testing.assert_allclose(s.s_code_img.data, [[1.7057739726157213]], atol=1e-12)

    def test_score_bound(self):
        for lam in (-2.5, 0.3, 4.0):
            q = diffgeo_seq(ball_pts((5, 4), 1.0, scale=1.5))
            k = diffgeo_seq(ball_pts((6, 4), 1.0, scale=1.5))
            s = attention_scores(q, k, lam)
            assert np.max(np.abs(s.s_code_img.data)) <= abs(lam) + 1e-12
            assert np.max(np.abs(s.s_img_code.data)) <= abs(lam) + 1e-12

    def test_transpose_property(self):
        q = diffgeo_seq(ball_pts((4, 5), 1.0))
        k = diffgeo_seq(ball_pts((3, 5), 1.0))
        s = attention_scores(q, k, 1.3)
        assert np.max(np.abs(s.s_img_code.data - s.s_code_img.data.T)) < 1e-12

    def test_softmax_flag(self):
        q = diffgeo_seq(ball_pts((2, 3), 1.0))
        k = diffgeo_seq(ball_pts((4, 3), 1.0))
        s = attention_scores(q, k, 1.5, softmax_scores=True)
        np.testing.assert_allclose(s.s_code_img.data.sum(axis=-1), 1.0, atol=1e-9)
        np.testing.assert_allclose(s.s_img_code.data.sum(axis=-1), 1.0, atol=1e-9)


def diffgeo_seq(pts, c=1.0, modality="code"):
    from gocoma.fusion.gcsa import HyperbolicSequence

    return HyperbolicSequence(ad.wrap(np.asarray(pts, dtype=np.float64)), c, modality)


class TestAggregate:
    def test_single_operand_is_scalar_mul(self):
        from gocoma.fusion.gcsa import AttentionMatrix

        v = diffgeo_seq(ball_pts((1, 3), 1.0), modality="image")
        s = AttentionMatrix(
            s_code_img=ad.wrap(np.array([[0.8], [-0.5]])),
            s_img_code=ad.wrap(np.array([[0.8, -0.5]])),
        )
        out = aggregate("code->img", s, v)
        expect = geo.mobius_scalar_mul(
            np.array([[0.8], [-0.5]]), v.tokens.data[0], 1.0
        )
        assert np.max(np.abs(out.tokens.data - expect)) < 1e-12

    def test_zero_scores_origin(self):
        from gocoma.fusion.gcsa import AttentionMatrix

        v = diffgeo_seq(ball_pts((4, 3), 1.0), modality="image")
        s = AttentionMatrix(
            s_code_img=ad.wrap(np.zeros((2, 4))), s_img_code=ad.wrap(np.zeros((4, 2)))
        )
        out = aggregate("code->img", s, v)
        assert np.max(np.abs(out.tokens.data)) < 1e-12

    def test_collinear_fold_oracle(self):
        from gocoma.fusion.gcsa import AttentionMatrix

        # two operands on axis 0; compare the full fold against the 1-D oracle
        xs = np.array([0.3, -0.2])
        weights = np.array([[0.7, 1.1]])
        v = diffgeo_seq(np.stack([xs, np.zeros(2)], axis=-1), modality="image")
        s = AttentionMatrix(
            s_code_img=ad.wrap(weights), s_img_code=ad.wrap(weights.T)
        )
        out = aggregate("code->img", s, v)
        scaled = [
            float(geo.mobius_scalar_mul(w, np.array([x, 0.0]), 1.0)[0])
            for w, x in zip(weights[0], xs)
        ]
        expect = mobius_fold_1d(scaled, 1.0)
        np.testing.assert_allclose(out.tokens.data[0, 0], expect, atol=1e-12)
        np.testing.assert_allclose(out.tokens.data[0, 1], 0.0, atol=1e-15)

    def test_bad_direction(self):
        from gocoma.fusion.gcsa import AttentionMatrix

        s = AttentionMatrix(ad.wrap(np.zeros((1, 1))), ad.wrap(np.zeros((1, 1))))
        with pytest.raises(InvalidInputError):
            aggregate("sideways", s, diffgeo_seq(np.zeros((1, 2))))


class TestPoolAndFuse:
    def test_single_tokens_reduce_to_mobius_add(self):
        a = ball_pts((1, 3), 1.0)
        b = ball_pts((1, 3), 1.0)
        fused = pool_and_fuse(diffgeo_seq(a), diffgeo_seq(b, modality="image"))
        expect = geo.mobius_add(a[0], b[0], 1.0)
        assert np.max(np.abs(fused.z_hyp.data - expect)) < 1e-12

    def test_origin_image_is_identity(self):
        a = ball_pts((3, 4), 1.0)
        fused = pool_and_fuse(
            diffgeo_seq(a), diffgeo_seq(np.zeros((2, 4)), modality="image")
        )
        pooled = a[0]
        for t in range(1, 3):
            pooled = geo.mobius_add(pooled, a[t], 1.0)
        assert np.max(np.abs(fused.z_hyp.data - pooled)) < 1e-12

    def test_collinear_oracle(self):
        xs = [0.2, 0.3, -0.1]
        ys = [0.25, -0.4]
        code = diffgeo_seq(np.stack([xs, np.zeros(3)], axis=-1))
        img = diffgeo_seq(np.stack([ys, np.zeros(2)], axis=-1), modality="image")
        fused = pool_and_fuse(code, img)
        expect = mobius_fold_1d([mobius_fold_1d(xs, 1.0), mobius_fold_1d(ys, 1.0)], 1.0)
        np.testing.assert_allclose(fused.z_hyp.data[0], expect, atol=1e-12)

    def test_z_euc_is_log_of_z_hyp(self):
        code = diffgeo_seq(ball_pts((2, 3), 1.0))
        img = diffgeo_seq(ball_pts((2, 3), 1.0), modality="image")
        fused = pool_and_fuse(code, img)
        assert np.array_equal(fused.z_euc.data, geo.log0(fused.z_hyp.data, 1.0))


class TestGcsaForward:
    def test_degenerate_zeros(self):
        cfg = GcsaConfig(d_model=3)
        p = init_params(4, 4, cfg, seed=0)
        fused = gcsa_forward(np.zeros((1, 2, 4)), np.zeros((1, 2, 4)), p, cfg)
        assert np.max(np.abs(fused.z_euc.data)) < 1e-12

    def test_identity_params_match_hand_pipeline(self):
        cfg = GcsaConfig(d_model=4)
        p = init_params(4, 4, cfg, seed=1)
        code_euc = RNG.normal(size=(2, 4)) * 0.4
        img_euc = RNG.normal(size=(3, 4)) * 0.4
        fused = gcsa_forward(code_euc, img_euc, p, cfg)

        code = lift(code_euc, 1.0, "code")
        img = lift(img_euc, 1.0, "image")
        q, k, v = compute_qkv(code, img, p)
        s = attention_scores(q, k, p.lam)
        z_code = aggregate("code->img", s, v)
        z_img = aggregate("img->code", s, q)
        by_hand = pool_and_fuse(z_code, z_img)
        assert np.array_equal(fused.z_euc.data, by_hand.z_euc.data)

    def test_reduction_lambda_zero(self):
        cfg = GcsaConfig(d_model=4)
        p = init_params(3, 5, cfg, seed=2)
        p.lam.data = np.asarray(0.0)
        fused = gcsa_forward(
            RNG.normal(size=(2, 3)) * 0.5, RNG.normal(size=(2, 5)) * 0.5, p, cfg
        )
        assert np.max(np.abs(fused.z_hyp.data)) < 1e-12
        assert np.max(np.abs(fused.z_euc.data)) < 1e-12

    def test_determinism(self):
        cfg = GcsaConfig(d_model=5)
        p = init_params(4, 6, cfg, seed=9)
        code = RNG.normal(size=(3, 2, 4))
        img = RNG.normal(size=(3, 2, 6))
        a = gcsa_forward(code, img, p, cfg).z_euc.data
        b = gcsa_forward(code, img, p, cfg).z_euc.data
        assert np.array_equal(a, b)

    def test_batched_matches_per_sample(self):
        cfg = GcsaConfig(d_model=4)
        p = init_params(3, 3, cfg, seed=5)
        code = RNG.normal(size=(3, 2, 3)) * 0.6
        img = RNG.normal(size=(3, 2, 3)) * 0.6
        batched = gcsa_forward(code, img, p, cfg).z_euc.data
        for i in range(3):
            single = gcsa_forward(code[i], img[i], p, cfg).z_euc.data
            assert np.array_equal(batched[i], single)

    def test_intermediate_tokens_stay_in_ball(self):
        cfg = GcsaConfig(d_model=4, curvature=2.0)
        p = init_params(3, 3, cfg, seed=6)
        code = lift(RNG.normal(size=(4, 3)) * 3.0, 2.0, "code")
        img = lift(RNG.normal(size=(5, 3)) * 3.0, 2.0, "image")
        q, k, v = compute_qkv(code, img, p)
        s = attention_scores(q, k, p.lam)
        z_c = aggregate("code->img", s, v)
        z_i = aggregate("img->code", s, q)
        lim = geo.max_norm(2.0) + 1e-15
        for seq in (code, img, q, k, v, z_c, z_i):
            assert np.all(np.linalg.norm(seq.tokens.data, axis=-1) <= lim)


class TestGcsaBackward:
    def test_zero_upstream(self):
        cfg = GcsaConfig(d_model=3)
        p = init_params(3, 3, cfg, seed=4)
        fused = gcsa_forward(
            RNG.normal(size=(2, 3)) * 0.4, RNG.normal(size=(2, 3)) * 0.4, p, cfg
        )
        grads = gcsa_backward(fused, np.zeros_like(fused.z_euc.data), p)
        for name, g in grads.items():
            assert np.all(g == 0.0), name

    def test_lambda_gradient_closed_form(self):
        # T=1 both sides, loss = s itself: dL/dlambda = GCS(Q, K)
        cfg = GcsaConfig(d_model=3)
        p = init_params(3, 3, cfg, seed=8)
        code = lift(RNG.normal(size=(1, 3)) * 0.4, 1.0, "code")
        img = lift(RNG.normal(size=(1, 3)) * 0.4, 1.0, "image")
        q, k, v = compute_qkv(code, img, p)
        s = attention_scores(q, k, p.lam)
        for t in p.tensors():
            t.grad = None
        s.s_code_img.backward(np.ones((1, 1)))
        expect = geo.gcs(q.tokens.data[0], k.tokens.data[0], 1.0)
        np.testing.assert_allclose(p.lam.grad, expect, atol=1e-12)

    def test_fd_agreement_small_case(self):
        run_gcsa_fd_case(d_code=3, d_img=3, d_model=4, t_c=2, t_v=2, seed=11)

    def test_fd_agreement_symmetric_values(self):
        run_gcsa_fd_case(
            d_code=3, d_img=4, d_model=3, t_c=2, t_v=3, seed=12, symmetric_values=True
        )


def run_gcsa_fd_case(
    d_code, d_img, d_model, t_c, t_v, seed, symmetric_values=False, softmax=False,
    h=1e-5, tol=1e-4,
):
    """FD-check every parameter entry of a GCSA configuration."""
    cfg = GcsaConfig(
        d_model=d_model, softmax_scores=softmax, symmetric_values=symmetric_values
    )
    p = init_params(d_code, d_img, cfg, seed=seed)
    rng = np.random.default_rng(seed + 1000)
    for b in (p.b_Q_t, p.b_K_t, p.b_V_t):
        b.data[:] = rng.normal(size=d_model) * 0.1
    if p.b_Vc_t is not None:
        p.b_Vc_t.data[:] = rng.normal(size=d_model) * 0.1
    code = rng.normal(size=(t_c, d_code)) * 0.5
    img = rng.normal(size=(t_v, d_img)) * 0.5
    probe = rng.normal(size=(d_model,))

    def loss_value():
        fused = gcsa_forward(code, img, p, cfg)
        return fused, float(np.sum(fused.z_euc.data * probe))

    fused, _ = loss_value()
    for t in p.tensors():
        t.grad = None
    loss = ad.sum_(fused.z_euc * probe)
    loss.backward()

    for name, t in p.named().items():
        ana = t.grad if t.grad is not None else np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        num = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            _, up = loss_value()
            flat[i] = orig - h
            _, dn = loss_value()
            flat[i] = orig
            num[i] = (up - dn) / (2 * h)
        err = rel_err(np.asarray(ana).reshape(-1), num)
        assert err < tol, f"{name}: rel err {err}"


class TestCheckpoint:
    def test_roundtrip_bitwise(self, tmp_path):
        cfg = GcsaConfig(d_model=5, curvature=0.7)
        p = init_params(3, 4, cfg, seed=13)
        p.b_Q_t.data[:] = RNG.normal(size=5) * 0.1
        p.lam.data = np.asarray(1.37)
        path = tmp_path / "layer.gcsa"
        save_checkpoint(path, p)
        q = load_checkpoint(path)
        for a, b in zip(p.tensors(), q.tensors()):
            assert np.array_equal(a.data, b.data)
        assert q.curvature == p.curvature

    def test_magic_enforced(self, tmp_path):
        path = tmp_path / "bad.gcsa"
        path.write_bytes(b"NOPE0001" + b"\x00" * 64)
        with pytest.raises(InvalidInputError):
            load_checkpoint(path)

    def test_truncation_detected(self, tmp_path):
        cfg = GcsaConfig(d_model=3)
        p = init_params(2, 2, cfg, seed=0)
        path = tmp_path / "layer.gcsa"
        save_checkpoint(path, p)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(InvalidInputError):
            load_checkpoint(path)


class TestBaselineConcat:
    def test_dims_add(self):
        out = baseline_concat(np.zeros(3), np.zeros(2))
        assert out.data.shape == (5,)
        assert np.all(out.data == 0.0)

    def test_order_fixed(self):
        out = baseline_concat(np.array([1.0, 2.0]), np.array([3.0]))
        np.testing.assert_array_equal(out.data, [1.0, 2.0, 3.0])

    def test_batched(self):
        out = baseline_concat(np.ones((4, 3)), np.zeros((4, 2)))
        assert out.data.shape == (4, 5)


class TestBaselineXAttn:
    def test_single_token_is_v_projection(self):
        params = init_xattn_params(3, 3, 4, seed=21)
        code = RNG.normal(size=(1, 3))
        img = RNG.normal(size=(1, 3))
        out = baseline_euclid_xattn(code, img, params)
        expect_ci = img[0] @ params.W_V_ci.data.T
        expect_ic = code[0] @ params.W_V_ic.data.T
        np.testing.assert_allclose(out.data, np.concatenate([expect_ci, expect_ic]), atol=1e-12)

    def test_hand_computed_small_case(self):
        params = init_xattn_params(2, 2, 2, seed=22)
        code = RNG.normal(size=(2, 2))
        img = RNG.normal(size=(3, 2))
        out = baseline_euclid_xattn(code, img, params).data

        def attend(qs, kvs, WQ, WK, WV):
            q, k, v = qs @ WQ.T, kvs @ WK.T, kvs @ WV.T
            logits = q @ k.T / np.sqrt(2.0)
            e = np.exp(logits - logits.max(axis=-1, keepdims=True))
            a = e / e.sum(axis=-1, keepdims=True)
            return (a @ v).mean(axis=0)

        expect = np.concatenate(
            [
                attend(code, img, params.W_Q_ci.data, params.W_K_ci.data, params.W_V_ci.data),
                attend(img, code, params.W_Q_ic.data, params.W_K_ic.data, params.W_V_ic.data),
            ]
        )
        np.testing.assert_allclose(out, expect, atol=1e-12)

    def test_param_gradients_fd(self):
        params = init_xattn_params(3, 2, 3, seed=23)
        code = RNG.normal(size=(2, 3))
        img = RNG.normal(size=(2, 2))
        probe = RNG.normal(size=(6,))

        def value():
            return float(
                np.sum(baseline_euclid_xattn(code, img, params).data * probe)
            )

        for t in params.tensors():
            t.grad = None
        loss = ad.sum_(baseline_euclid_xattn(code, img, params) * probe)
        loss.backward()
        for t in params.tensors():
            flat = t.data.reshape(-1)
            num = np.zeros_like(flat)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + 1e-6
                up = value()
                flat[i] = orig - 1e-6
                dn = value()
                flat[i] = orig
                num[i] = (up - dn) / 2e-6
            assert rel_err(t.grad.reshape(-1), num) < 1e-5

    def test_shape_validation(self):
        params = init_xattn_params(3, 2, 3, seed=24)
        with pytest.raises(InvalidInputError):
            baseline_euclid_xattn(np.zeros((2, 4)), np.zeros((2, 2)), params)


class TestBaselineMobius:
    def test_zero_image_identity(self):
        code = RNG.normal(size=(4,)) * 0.5
        out = baseline_mobius_fuse(code, np.zeros(4), 1.0)
        assert np.max(np.abs(out.data - code)) < 1e-8

    def test_both_zero(self):
        out = baseline_mobius_fuse(np.zeros(3), np.zeros(3), 1.0)
        assert np.array_equal(out.data, np.zeros(3))

    def test_collinear_oracle(self):
        out = baseline_mobius_fuse(np.array([0.4, 0.0]), np.array([0.3, 0.0]), 1.0)
        from oracles import exp0_1d, log0_1d, mobius_add_1d

        expect = log0_1d(mobius_add_1d(exp0_1d(0.4), exp0_1d(0.3)))
        np.testing.assert_allclose(out.data[0], expect, atol=1e-12)

    def test_unequal_dims_require_projection(self):
        with pytest.raises(InvalidInputError):
            baseline_mobius_fuse(np.zeros(3), np.zeros(4), 1.0)
        proj = np.zeros((3, 4))
        out = baseline_mobius_fuse(np.zeros((1, 3)), np.zeros((1, 4)), 1.0, proj_img=proj)
        assert out.data.shape == (1, 3)
