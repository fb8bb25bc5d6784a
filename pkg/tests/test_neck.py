"""Testes do CRU, do GAD, do AWF, do ASFB e dos pescoços HFAN e FPN."""
import pytest
import torch
import torch.nn.functional as F

from evaluation.gradcheck import grad_check
from neck import (
    AdaptiveScaleFusionBlock,
    ContentReconstructionUpsampler,
    DeformableSamplingField,
    FeaturePyramidNeck,
    FusionWeights,
    GeometricAlignmentDownsampler,
    HierarchicalFeatureAggregationNeck,
    PyramidError,
    ReassemblyKernelField,
    awf_fuse,
    cru_upsample,
    deformable_sample_conv,
    gad_downsample,
    reassemble,
)
from ssm import NonFiniteError


CHANNELS = {2: 8, 3: 8, 4: 16, 5: 16}


def make_pyramid(batch=2, size=32, channels=CHANNELS, dtype=torch.float32):
    return {level: torch.randn(batch, channels[level], size // 2 ** level, size // 2 ** level, dtype=dtype)
            for level in (2, 3, 4, 5)}


def center_delta_field(batch, height, width, kernel_size):
    kernels = torch.zeros(batch, kernel_size ** 2, height, width)
    kernels[:, kernel_size ** 2 // 2] = 1.0
    return ReassemblyKernelField(kernels, kernel_size)


class TestContentReconstructionUpsampler:
    """F_out(i, j) = Σ K_{i,j}(p, q) · F_in(p, q)."""

    def test_center_delta_is_nearest_neighbour(self):
        f_in = torch.randn(2, 3, 4, 5)
        out = reassemble(f_in, center_delta_field(2, 8, 10, 5), scale=2)
        torch.testing.assert_close(out, F.interpolate(f_in, scale_factor=2, mode='nearest'))

    def test_constant_input_preserved(self):
        f_in = torch.full((1, 4, 6, 6), 2.5)
        # sem zeros de padding a contribuir: núcleo 1×1
        out = cru_upsample(f_in, torch.randn(1, 1, 12, 12), scale=2, kernel_size=1)
        torch.testing.assert_close(out, torch.full((1, 4, 12, 12), 2.5))

    def test_interior_constant_preserved_with_wide_kernels(self):
        f_in = torch.full((1, 2, 8, 8), -1.5)
        out = cru_upsample(f_in, torch.randn(1, 9, 16, 16), scale=2, kernel_size=3)
        # posições cuja vizinhança 3×3 de origem está dentro da imagem
        torch.testing.assert_close(out[..., 2:14, 2:14], torch.full((1, 2, 12, 12), -1.5))

    def test_uniform_kernels_match_brute_force(self):
        f_in = torch.tensor([[1.0, 2.0], [3.0, 4.0]]).view(1, 1, 2, 2)
        field = ReassemblyKernelField(torch.full((1, 9, 4, 4), 1.0 / 9), 3)
        out = reassemble(f_in, field, scale=2)[0, 0]

        padded = F.pad(f_in[0, 0], (1, 1, 1, 1))
        for i in range(4):
            for j in range(4):
                si, sj = i // 2, j // 2
                expected = float(padded[si:si + 3, sj:sj + 3].sum()) / 9.0
                assert float(out[i, j]) == pytest.approx(expected, abs=1e-6)

    def test_output_within_neighbourhood_bounds(self):
        f_in = torch.randn(1, 3, 5, 5)
        out = cru_upsample(f_in, torch.randn(1, 25, 10, 10), scale=2, kernel_size=5)
        padded = F.pad(f_in, (2, 2, 2, 2))
        for i in range(10):
            for j in range(10):
                window = padded[0, :, i // 2:i // 2 + 5, j // 2:j // 2 + 5]
                low = window.amin(dim=(1, 2))
                high = window.amax(dim=(1, 2))
                assert bool((out[0, :, i, j] >= low - 1e-6).all())
                assert bool((out[0, :, i, j] <= high + 1e-6).all())

    def test_unnormalized_field_rejected(self):
        with pytest.raises(PyramidError, match='normalizados'):
            ReassemblyKernelField(torch.full((1, 9, 4, 4), 0.2), 3)
        negative = torch.zeros(1, 4, 2, 2)
        negative[:, 0] = 2.0
        negative[:, 1] = -1.0
        with pytest.raises(PyramidError, match='negativas'):
            ReassemblyKernelField(negative, 2)

    def test_scale_below_two_rejected(self):
        with pytest.raises(PyramidError):
            reassemble(torch.randn(1, 1, 2, 2), center_delta_field(1, 2, 2, 3), scale=1)

    def test_module_output_shape(self):
        cru = ContentReconstructionUpsampler(8)
        assert cru(torch.randn(2, 8, 3, 5)).shape == (2, 8, 6, 10)

    @pytest.mark.parametrize('wrt', [0, 1])
    def test_gradients(self, wrt):
        f_in = torch.randn(1, 2, 6, 6)
        logits = torch.randn(1, 9, 12, 12)
        report = grad_check(lambda x, k: cru_upsample(x, k, scale=2, kernel_size=3),
                            [f_in, logits], wrt=[wrt], max_elements=60)
        assert report.passed, report.message


class TestGeometricAlignmentDownsampler:
    """Convolução deformável modulada de passo 2."""

    def test_zero_offsets_unit_modulation_is_strided_convolution(self):
        f_in = torch.randn(2, 3, 9, 9, dtype=torch.float64)
        weight = torch.randn(4, 3, 3, 3, dtype=torch.float64)
        bias = torch.randn(4, dtype=torch.float64)
        field = DeformableSamplingField(torch.zeros(2, 18, 5, 5, dtype=torch.float64),
                                        torch.ones(2, 9, 5, 5, dtype=torch.float64))
        out = deformable_sample_conv(f_in, field, weight, bias)
        expected = F.conv2d(f_in, weight, bias, stride=2, padding=1)
        torch.testing.assert_close(out, expected, rtol=0, atol=1e-6)

    def test_unit_row_offset_shifts_input(self):
        f_in = torch.randn(1, 2, 8, 8, dtype=torch.float64)
        weight = torch.randn(3, 2, 3, 3, dtype=torch.float64)
        offsets = torch.zeros(1, 18, 4, 4, dtype=torch.float64)
        offsets[:, 0::2] = 1.0
        field = DeformableSamplingField(offsets, torch.ones(1, 9, 4, 4, dtype=torch.float64))
        out = deformable_sample_conv(f_in, field, weight, None)

        shifted = torch.zeros_like(f_in)
        shifted[:, :, :-1] = f_in[:, :, 1:]
        torch.testing.assert_close(out, F.conv2d(shifted, weight, stride=2, padding=1),
                                   rtol=0, atol=1e-6)

    def test_out_of_bounds_sampling_gives_zero(self):
        field = DeformableSamplingField(torch.full((1, 18, 3, 3), 100.0), torch.ones(1, 9, 3, 3))
        out = deformable_sample_conv(torch.randn(1, 2, 6, 6), field, torch.randn(2, 2, 3, 3), None)
        torch.testing.assert_close(out, torch.zeros_like(out))

    @pytest.mark.parametrize('size,expected', [(8, 4), (7, 4), (5, 3)])
    def test_output_size_is_ceil(self, size, expected):
        gad = GeometricAlignmentDownsampler(4, 6)
        assert gad(torch.randn(1, 4, size, size)).shape == (1, 6, expected, expected)

    def test_initial_field_is_regular_grid_at_half_modulation(self):
        gad = GeometricAlignmentDownsampler(4, 4)
        field = gad.sampling_field(torch.randn(1, 4, 6, 6))
        torch.testing.assert_close(field.offsets, torch.zeros_like(field.offsets))
        torch.testing.assert_close(field.modulation, torch.full_like(field.modulation, 0.5))

    def test_non_finite_offsets_rejected(self):
        offsets = torch.zeros(1, 18, 3, 3)
        offsets[0, 4, 1, 1] = float('inf')
        with pytest.raises(NonFiniteError, match='offsets'):
            gad_downsample(torch.randn(1, 2, 6, 6), offsets, torch.zeros(1, 9, 3, 3),
                           torch.randn(2, 2, 3, 3))

    def test_stride_below_two_rejected(self):
        with pytest.raises(PyramidError):
            gad_downsample(torch.randn(1, 2, 6, 6), torch.zeros(1, 18, 6, 6), torch.zeros(1, 9, 6, 6),
                           torch.randn(2, 2, 3, 3), stride=1)

    @pytest.mark.parametrize('wrt', [0, 1, 2])
    def test_gradients(self, wrt):
        generator = torch.Generator().manual_seed(4)
        f_in = torch.randn(1, 2, 6, 6, generator=generator)
        # deslocamentos afastados dos inteiros (pontos não diferenciáveis da interpolação)
        offsets = torch.rand(1, 18, 3, 3, generator=generator) * 0.6 + 0.2
        modulation = torch.randn(1, 9, 3, 3, generator=generator)
        weight = torch.randn(2, 2, 3, 3, generator=generator)
        report = grad_check(lambda x, o, m: gad_downsample(x, o, m, weight.double()),
                            [f_in, offsets, modulation], wrt=[wrt], max_elements=40)
        assert report.passed, report.message


class TestAdaptiveWeightedFuser:
    """(w_1·F_deep + w_2·F_mid + w_3·F_shallow) / (Σw + ε)."""

    def test_single_active_weight(self):
        maps = [torch.randn(1, 2, 3, 3) for _ in range(3)]
        out = awf_fuse(*maps, FusionWeights(torch.tensor([1.0, 0.0, 0.0])))
        torch.testing.assert_close(out, maps[0] / (1.0 + 1e-4))

    def test_equal_inputs(self):
        f = torch.randn(2, 3, 4, 4)
        w = torch.tensor([0.5, 2.0, 1.5])
        out = awf_fuse(f, f, f, FusionWeights(w))
        torch.testing.assert_close(out, f * 4.0 / (4.0 + 1e-4))

    def test_scalar_evaluation(self):
        maps = [torch.full((1, 1, 2, 2), v, dtype=torch.float64) for v in (1.0, 2.0, 3.0)]
        out = awf_fuse(*maps, FusionWeights(torch.tensor([1.0, 2.0, 3.0], dtype=torch.float64)))
        torch.testing.assert_close(out, torch.full_like(maps[0], 14.0 / 6.0001))
        assert float(out[0, 0, 0, 0]) == pytest.approx(2.333294445, abs=1e-8)

    def test_negative_weights_projected_to_zero(self):
        maps = [torch.randn(1, 2, 3, 3) for _ in range(3)]
        out = awf_fuse(*maps, FusionWeights(torch.tensor([-3.0, 1.0, -0.5])))
        torch.testing.assert_close(out, maps[1] / (1.0 + 1e-4))

    def test_boundary_level_pins_missing_weight(self):
        mid, shallow = torch.randn(1, 2, 3, 3), torch.randn(1, 2, 3, 3)
        out = awf_fuse(None, mid, shallow, FusionWeights(torch.tensor([5.0, 1.0, 1.0])))
        torch.testing.assert_close(out, (mid + shallow) / (2.0 + 1e-4))

    def test_convexity_up_to_epsilon(self):
        maps = [torch.randn(2, 3, 4, 4) for _ in range(3)]
        w = torch.rand(3) + 0.1
        out = awf_fuse(*maps, FusionWeights(w))
        scale = w.sum() / (w.sum() + 1e-4)
        stacked = torch.stack(maps)
        assert bool((out <= scale * stacked.amax(dim=0) + 1e-6).all())
        assert bool((out >= scale * stacked.amin(dim=0) - 1e-6).all())

    def test_shape_mismatch_rejected(self):
        with pytest.raises(PyramidError):
            awf_fuse(torch.randn(1, 2, 3, 3), torch.randn(1, 2, 4, 4), None,
                     FusionWeights(torch.ones(3)))

    def test_gradient_with_respect_to_weights(self):
        maps = [torch.randn(1, 2, 6, 6, dtype=torch.float64) for _ in range(3)]
        report = grad_check(lambda w: awf_fuse(*maps, FusionWeights(w)),
                            [torch.tensor([0.7, 1.3, 0.4])])
        assert report.passed, report.message


class TestAdaptiveScaleFusionBlock:

    @pytest.fixture
    def block(self) -> AdaptiveScaleFusionBlock:
        return AdaptiveScaleFusionBlock(16, 8, 8)

    def test_output_shape_equals_mid(self, block):
        out = block(torch.randn(2, 16, 4, 4), torch.randn(2, 8, 8, 8), torch.randn(2, 8, 16, 16))
        assert out.shape == (2, 8, 8, 8)

    def test_mid_only_weights_reduce_to_convolution(self, block):
        block.eval()
        with torch.no_grad():
            block.fuser.weight.copy_(torch.tensor([0.0, 1.0, 0.0]))
        p_mid = torch.randn(2, 8, 8, 8)
        out = block(torch.randn(2, 16, 4, 4), p_mid, torch.randn(2, 8, 16, 16))
        torch.testing.assert_close(out, block.out(p_mid / (1.0 + 1e-4)))

    def test_gradient_flows_to_all_inputs(self, block):
        inputs = [torch.randn(1, 16, 4, 4, requires_grad=True), torch.randn(1, 8, 8, 8, requires_grad=True),
                  torch.randn(1, 8, 16, 16, requires_grad=True)]
        block(*inputs).pow(2).sum().backward()
        for tensor in inputs:
            assert float(tensor.grad.abs().sum()) > 0

    def test_non_adjacent_scales_rejected(self, block):
        with pytest.raises(PyramidError, match='adjacentes'):
            block(torch.randn(1, 16, 2, 2), torch.randn(1, 8, 8, 8), torch.randn(1, 8, 16, 16))

    def test_missing_configured_input_rejected(self, block):
        with pytest.raises(PyramidError):
            block(None, torch.randn(1, 8, 8, 8), torch.randn(1, 8, 16, 16))

    def test_ablation_toggles_replace_components(self):
        block = AdaptiveScaleFusionBlock(16, 8, 8, use_cru=False, use_gad=False, use_awf=False)
        assert block.upsampler is None and block.fuser is None
        assert isinstance(block.downsampler, torch.nn.Conv2d)
        out = block(torch.randn(1, 16, 4, 4), torch.randn(1, 8, 8, 8), torch.randn(1, 8, 16, 16))
        assert out.shape == (1, 8, 8, 8)


class TestHierarchicalNeck:

    def test_shapes_preserved(self):
        neck = HierarchicalFeatureAggregationNeck(CHANNELS)
        pyramid = make_pyramid()
        out = neck(pyramid)
        assert {level: t.shape for level, t in out.items()} == {l: t.shape for l, t in pyramid.items()}

    def test_single_path_mode(self):
        neck = HierarchicalFeatureAggregationNeck(CHANNELS, hierarchical=False)
        assert len(neck.bottom_up) == 0
        out = neck(make_pyramid())
        assert [out[level].shape[-1] for level in (2, 3, 4, 5)] == [8, 4, 2, 1]

    def test_deep_perturbation_reaches_finest_level(self):
        neck = HierarchicalFeatureAggregationNeck(CHANNELS).eval()
        pyramid = make_pyramid(batch=1)
        perturbed = dict(pyramid)
        perturbed[5] = pyramid[5] + 1.0
        with torch.no_grad():
            delta = (neck(pyramid)[2] - neck(perturbed)[2]).abs().max()
        assert float(delta) > 0

    def test_missing_level_rejected(self):
        pyramid = make_pyramid()
        del pyramid[3]
        with pytest.raises(PyramidError, match='falta'):
            HierarchicalFeatureAggregationNeck(CHANNELS)(pyramid)

    def test_component_toggles_change_parameter_count(self):
        full = HierarchicalFeatureAggregationNeck(CHANNELS)
        reduced = HierarchicalFeatureAggregationNeck(CHANNELS, use_cru=False)
        count = lambda m: sum(p.numel() for p in m.parameters())
        assert count(reduced) < count(full)


class TestFeaturePyramidNeck:

    def test_shapes_preserved(self):
        neck = FeaturePyramidNeck(CHANNELS)
        pyramid = make_pyramid()
        out = neck(pyramid)
        for level in (2, 3, 4, 5):
            assert out[level].shape == pyramid[level].shape

    def test_inconsistent_resolution_rejected(self):
        pyramid = make_pyramid()
        pyramid[4] = torch.randn(2, 16, 3, 3)
        with pytest.raises(PyramidError):
            FeaturePyramidNeck(CHANNELS)(pyramid)
