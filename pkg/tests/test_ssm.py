"""Testes do varrimento seletivo e do bloco Mamba bidirecional."""
import math
import statistics
import time

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from evaluation.gradcheck import grad_check
from ssm import (
    BidirectionalMambaBlock,
    NonFiniteError,
    ScanParameters,
    ScanShapeError,
    TokenSequence,
    bidirectional_block,
    discretize,
    selective_scan,
    selective_scan_naive,
)


def random_instance(batch=2, length=8, channels=3, state=4, dtype=torch.float64, seed=0):
    generator = torch.Generator().manual_seed(seed)

    def rand(*shape):
        return torch.randn(*shape, generator=generator, dtype=dtype)

    x = TokenSequence(rand(batch, length, channels), (1, length))
    params = ScanParameters(
        delta=F.softplus(rand(batch, length, channels)),
        A=-torch.rand(channels, state, generator=generator, dtype=dtype) * 2 - 0.1,
        B_in=rand(batch, length, state),
        C_out=rand(batch, length, state),
        D=rand(channels),
    )
    return x, params


def unrolled_oracle(x: TokenSequence, p: ScanParameters) -> np.ndarray:
    """y_t = C_t · Σ_{τ≤t} (Π_{τ<j≤t} A_bar_j) · B_bar_τ · x_τ + D · x_t, em float64."""
    u = x.data.double().numpy()
    delta = p.delta.double().numpy()
    A = p.A.double().numpy()
    B_in = p.B_in.double().numpy()
    C_out = p.C_out.double().numpy()
    D = p.D.double().numpy()
    batch, length, channels = u.shape
    a_bar = np.exp(delta[..., None] * A)               # b n c s
    b_bar = delta[..., None] * B_in[:, :, None, :]     # b n c s

    y = np.zeros_like(u)
    for b in range(batch):
        for t in range(length):
            total = np.zeros((channels, A.shape[1]))
            for tau in range(t + 1):
                decay = np.ones((channels, A.shape[1]))
                for j in range(tau + 1, t + 1):
                    decay = decay * a_bar[b, j]
                total += decay * b_bar[b, tau] * u[b, tau][:, None]
            y[b, t] = total @ C_out[b, t] + D * u[b, t]
    return y


class TestDiscretize:
    """A_bar = exp(delta·A), B_bar = delta·B_in."""

    def test_zero_step_gives_identity_transition(self):
        delta = torch.zeros(1, 3, 2)
        A = -torch.rand(2, 4) - 0.5
        B_in = torch.randn(1, 3, 4)
        A_bar, B_bar = discretize(delta, A, B_in)
        torch.testing.assert_close(A_bar, torch.ones_like(A_bar))
        torch.testing.assert_close(B_bar, torch.zeros_like(B_bar))

    def test_half_life_step(self):
        A_bar, _ = discretize(torch.full((1, 1, 1), math.log(2.0), dtype=torch.float64),
                              torch.full((1, 1), -1.0, dtype=torch.float64),
                              torch.ones(1, 1, 1, dtype=torch.float64))
        assert float(A_bar) == pytest.approx(0.5, abs=1e-12)

    def test_scalar_exponential(self):
        A_bar, B_bar = discretize(torch.full((1, 1, 1), 0.3, dtype=torch.float64),
                                  torch.full((1, 1), -2.0, dtype=torch.float64),
                                  torch.full((1, 1, 1), 5.0, dtype=torch.float64))
        assert float(A_bar) == pytest.approx(0.548811636094026, abs=1e-12)
        assert float(B_bar) == pytest.approx(1.5, abs=1e-12)

    def test_negative_transition_stays_in_unit_interval(self):
        delta = F.softplus(torch.randn(2, 5, 3))
        A = -torch.rand(3, 4) - 0.01
        A_bar, _ = discretize(delta, A, torch.randn(2, 5, 4))
        assert bool(((A_bar > 0) & (A_bar < 1)).all())

    @pytest.mark.parametrize('name', ['delta', 'A', 'B_in'])
    def test_non_finite_inputs_rejected(self, name):
        tensors = {'delta': torch.ones(1, 2, 2), 'A': -torch.ones(2, 3), 'B_in': torch.ones(1, 2, 3)}
        tensors[name] = tensors[name].clone()
        tensors[name].view(-1)[0] = float('nan')
        with pytest.raises(NonFiniteError, match=name):
            discretize(tensors['delta'], tensors['A'], tensors['B_in'])

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            discretize(-torch.ones(1, 1, 1), -torch.ones(1, 1), torch.ones(1, 1, 1))


class TestNaiveScan:
    """Recorrência sequencial com h_0 = 0."""

    def test_single_step(self):
        x, p = random_instance(length=1)
        y = selective_scan_naive(x, p).data
        _, B_bar = discretize(p.delta, p.A, p.B_in)
        expected = torch.einsum('bcs,bs->bc', B_bar[:, 0] * x.data[:, 0, :, None], p.C_out[:, 0])
        expected = expected + p.D * x.data[:, 0]
        torch.testing.assert_close(y[:, 0], expected)

    def test_memoryless_when_transition_is_zero(self):
        x, p = random_instance(length=5)
        # delta·A → −inf faz A_bar = 0 sem tocar em B_bar
        p = ScanParameters(p.delta, torch.full_like(p.A, -1e6), p.B_in, p.C_out, p.D)
        y = selective_scan_naive(x, p).data
        _, B_bar = discretize(p.delta, p.A, p.B_in)
        expected = torch.einsum('btcs,bts->btc', B_bar * x.data.unsqueeze(-1), p.C_out) + p.D * x.data
        torch.testing.assert_close(y, expected)

    def test_matches_unrolled_sum(self):
        x, p = random_instance(length=8, state=4, seed=3)
        y = selective_scan_naive(x, p).data.numpy()
        np.testing.assert_allclose(y, unrolled_oracle(x, p), rtol=1e-6, atol=1e-9)

    def test_output_shape_equals_input_shape(self):
        x, p = random_instance(batch=3, length=7, channels=5)
        assert selective_scan_naive(x, p).data.shape == x.data.shape

    def test_shape_mismatch_rejected(self):
        x, p = random_instance()
        bad = ScanParameters(p.delta, p.A, p.B_in[:, :, :2], p.C_out, p.D)
        with pytest.raises(ScanShapeError, match='B_in'):
            selective_scan_naive(x, bad)

    def test_bounded_state_with_constant_parameters(self):
        """|h_t| ≤ max|B_bar·x| / (1 − max A_bar) quando os parâmetros são constantes."""
        length, channels, state = 64, 2, 3
        u = torch.randn(1, length, channels, dtype=torch.float64)
        delta = torch.full((1, length, channels), 0.2, dtype=torch.float64)
        A = -torch.tensor([[0.5, 1.0, 2.0]] * channels, dtype=torch.float64)
        B_in = torch.full((1, length, state), 0.7, dtype=torch.float64)
        A_bar, B_bar = discretize(delta, A, B_in)
        bound = float((B_bar * u.unsqueeze(-1)).abs().max()) / (1.0 - float(A_bar.max()))

        h = torch.zeros(1, channels, state, dtype=torch.float64)
        for t in range(length):
            h = A_bar[:, t] * h + B_bar[:, t] * u[:, t].unsqueeze(-1)
            assert float(h.abs().max()) <= bound + 1e-12


class TestChunkedScan:
    """selective_scan ≡ selective_scan_naive."""

    def test_single_step_identical_to_naive(self):
        x, p = random_instance(length=1)
        torch.testing.assert_close(selective_scan(x, p).data, selective_scan_naive(x, p).data)

    def test_long_sequence_matches_naive(self):
        x, p = random_instance(batch=1, length=256, channels=4, state=4, seed=7)
        fast = selective_scan(x, p).data
        slow = selective_scan_naive(x, p).data
        rel = (fast - slow).abs().max() / slow.abs().max()
        assert float(rel) < 1e-5

    def test_random_instances_match_naive(self):
        rng = np.random.default_rng(0)
        for index in range(100):
            length = int(rng.integers(1, 65))
            state = int(rng.integers(1, 9))
            x, p = random_instance(batch=1, length=length, channels=3, state=state, seed=index)
            fast = selective_scan(x, p).data
            slow = selective_scan_naive(x, p).data
            torch.testing.assert_close(fast, slow, rtol=1e-5, atol=1e-8)

    @pytest.mark.parametrize('chunk_size', [1, 3, 16, 100])
    def test_chunk_size_does_not_change_result(self, chunk_size):
        x, p = random_instance(length=20, seed=2)
        torch.testing.assert_close(selective_scan(x, p, chunk_size=chunk_size).data,
                                   selective_scan_naive(x, p).data, rtol=1e-5, atol=1e-8)

    def test_invalid_chunk_size_rejected(self):
        x, p = random_instance()
        with pytest.raises(ValueError):
            selective_scan(x, p, chunk_size=0)

    def test_cost_grows_linearly(self):
        def median_time(length):
            x, p = random_instance(batch=1, length=length, channels=8, state=8, dtype=torch.float32)
            samples = []
            for _ in range(7):
                start = time.perf_counter()
                selective_scan(x, p)
                samples.append(time.perf_counter() - start)
            return statistics.median(samples)

        median_time(128)
        # ×8 em N: linear dá ≈ 8, quadrático ≈ 64
        assert median_time(2048) <= 24.0 * median_time(256)


class TestScanGradients:
    """Gradientes analíticos contra diferenças centrais (float64, N ≤ 8)."""

    @pytest.mark.parametrize('target', ['x', 'delta', 'B_in', 'C_out'])
    def test_naive_scan_gradients(self, target):
        x, p = random_instance(batch=1, length=6, channels=2, state=3, seed=5)
        names = ['x', 'delta', 'B_in', 'C_out']
        inputs = [x.data, p.delta, p.B_in, p.C_out]

        def op(u, delta, B_in, C_out):
            return selective_scan_naive(x.with_data(u), ScanParameters(delta, p.A, B_in, C_out, p.D)).data

        report = grad_check(op, inputs, step=1e-4, tolerance=1e-3, wrt=[names.index(target)])
        assert report.passed, report.message

    def test_chunked_scan_gradients_match_autograd_gradcheck(self):
        x, p = random_instance(batch=1, length=5, channels=2, state=2, seed=9)
        u = x.data.clone().requires_grad_(True)

        def op(u):
            return selective_scan(x.with_data(u), p, chunk_size=2).data

        assert torch.autograd.gradcheck(op, (u,), eps=1e-6, atol=1e-5)


class TestBidirectionalBlock:
    """X' = LayerNorm(X + Fusion_bi(Cat(Y_fwd, Y_bwd)))."""

    def test_zero_fusion_gives_layer_norm_of_input(self):
        x, p = random_instance(length=6, channels=4)
        weight = torch.zeros(4, 8, dtype=torch.float64)
        out = bidirectional_block(x, p, p, weight)
        torch.testing.assert_close(out.data, F.layer_norm(x.data, (4,)))

    def test_fusion_shape_mismatch_rejected(self):
        x, p = random_instance(channels=4)
        with pytest.raises(ScanShapeError, match='Fusion_bi'):
            bidirectional_block(x, p, p, torch.zeros(4, 4, dtype=torch.float64))

    def test_length_one_tied_directions_agree(self):
        block = BidirectionalMambaBlock(4, state_dim=3, tie_directions=True).double()
        x = TokenSequence(torch.randn(2, 1, 4, dtype=torch.float64), (1, 1))
        features = block.directional_features(x, scan=selective_scan_naive)
        torch.testing.assert_close(features[..., :4], features[..., 4:], rtol=0, atol=0)

    def test_reversal_symmetry_with_tied_directions(self):
        block = BidirectionalMambaBlock(3, state_dim=4, tie_directions=True).double()
        x = TokenSequence(torch.randn(2, 6, 3, dtype=torch.float64), (2, 3))
        forward = block.directional_features(x, scan=selective_scan_naive)
        backward = block.directional_features(x.reversed(), scan=selective_scan_naive)
        swapped = torch.cat([forward[..., 3:], forward[..., :3]], dim=-1)
        torch.testing.assert_close(backward, torch.flip(swapped, dims=[1]), rtol=1e-6, atol=1e-6)

    def test_independent_directions_by_default(self):
        block = BidirectionalMambaBlock(4)
        assert block.ssm_bwd is not None and block.ssm_bwd is not block.ssm_fwd

    def test_unidirectional_block_fuses_forward_only(self):
        block = BidirectionalMambaBlock(4, bidirectional=False)
        assert block.fusion.in_features == 4
        x = TokenSequence(torch.randn(1, 9, 4), (3, 3))
        assert block(x).data.shape == (1, 9, 4)

    def test_output_shape_and_feature_map_round_trip(self):
        block = BidirectionalMambaBlock(5)
        feature_map = torch.randn(2, 5, 3, 4)
        seq = TokenSequence.from_feature_map(feature_map)
        assert seq.origin_shape == (3, 4)
        torch.testing.assert_close(seq.to_feature_map(), feature_map)
        assert block(seq).to_feature_map().shape == feature_map.shape

    def test_row_major_flatten_order(self):
        feature_map = torch.arange(6.0).reshape(1, 1, 2, 3)
        seq = TokenSequence.from_feature_map(feature_map)
        assert seq.data[0, :, 0].tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
