"""Testes do detetor: backbone, cabeças, perda, NMS, factory, decorators e checkpoints."""
import math

import pytest
import torch

from config.settings import ConfigError, ModelConfig, RunConfig, VARIANTS, VALID_COMBINATIONS, config_hash
from decorators import ModalityMaskDecorator, TimedDetectorDecorator
from evaluation.gradcheck import grad_check
from factories import ABLATION_GRIDS, DetectorFactory, available_grids, get_grid
from fusion import ConcatFusion, DGCMFM
from models import (
    BackboneInputError,
    CheckpointError,
    Detection,
    HeadOutput,
    TargetError,
    assign_level,
    assign_targets,
    compute_loss,
    decode_and_nms,
    decode_box,
    encode_box,
    greedy_nms,
    nms_detections,
    load_checkpoint,
    positive_cell,
    save_checkpoint,
)
from neck import PyramidError


def make_output(batch=1, size=64, num_classes=3, logit=-30.0, levels=(2, 3, 4, 5)):
    cls_logits = {l: torch.full((batch, num_classes, size // 2 ** l, size // 2 ** l), logit) for l in levels}
    box_regs = {l: torch.ones(batch, 4, size // 2 ** l, size // 2 ** l) for l in levels}
    return HeadOutput(cls_logits, box_regs)


def all_combinations():
    return [(variant, neck) for variant in VARIANTS for neck in VALID_COMBINATIONS[variant]]


class TestModelConfig:

    def test_input_size_must_be_divisible_by_32(self):
        with pytest.raises(ValueError, match='32'):
            ModelConfig(img_size=48)

    def test_combination_outside_grid_rejected(self):
        with pytest.raises(ValueError, match='grelha'):
            ModelConfig(variant='uni-mamba', neck='hfan')

    def test_scale_multiplies_base_widths(self):
        assert ModelConfig(scale='s').pyramid_channels == {2: 16, 3: 32, 4: 64, 5: 128}
        assert ModelConfig(scale='n').pyramid_channels == {2: 8, 3: 16, 4: 32, 5: 64}
        assert ModelConfig(scale='m').pyramid_channels == {2: 32, 3: 64, 4: 128, 5: 256}

    def test_hash_is_stable_and_sensitive(self):
        a = ModelConfig()
        assert config_hash(a) == config_hash(ModelConfig())
        assert len(config_hash(a)) == 16
        assert config_hash(a) != config_hash(ModelConfig(use_cru=False))

    def test_fusion_config_follows_variant(self):
        assert not ModelConfig(variant='uni-mamba', neck='fpn').fusion_config(3).bidirectional
        assert not ModelConfig(variant='bi-mamba', neck='fpn').fusion_config(3).gated
        assert ModelConfig(variant='dgc-gate', neck='fpn').fusion_config(3).gated


class TestBackbone:

    def test_pyramid_sizes_for_64_pixels(self, tiny_model_config):
        cfg = tiny_model_config.model_copy(update={'img_size': 64})
        model = DetectorFactory.create_detector(cfg, seed=0)
        pyramid = model.backbone(torch.rand(2, 3, 64, 64), torch.rand(2, 1, 64, 64))
        assert [pyramid[level].shape[-1] for level in (2, 3, 4, 5)] == [16, 8, 4, 2]

    def test_identical_modalities_give_finite_outputs(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        rgb = torch.rand(2, 3, 32, 32)
        output = model(rgb, rgb)
        assert all(torch.isfinite(t).all() for t in output.cls_logits.values())

    def test_unregistered_inputs_rejected(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        with pytest.raises(BackboneInputError, match='registadas'):
            model(torch.rand(2, 3, 32, 32), torch.rand(2, 1, 64, 64))
        with pytest.raises(BackboneInputError):
            model(torch.rand(2, 3, 32, 32), None)

    def test_concat_variant_has_same_shapes_as_full(self):
        full = DetectorFactory.create_detector(ModelConfig(variant='full', neck='hfan', scale='n', img_size=32))
        concat = DetectorFactory.create_detector(ModelConfig(variant='concat-fusion', neck='hfan', scale='n',
                                                             img_size=32))
        rgb, ir = torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32)
        assert full(rgb, ir).shapes() == concat(rgb, ir).shapes()
        assert isinstance(concat.backbone.fusion['3'], ConcatFusion)
        assert isinstance(full.backbone.fusion['3'], DGCMFM)

    def test_single_stream_ignores_ir(self):
        model = DetectorFactory.create_detector(ModelConfig(variant='single-stream', neck='hfan', scale='n',
                                                            img_size=32), seed=0).eval()
        rgb = torch.rand(2, 3, 32, 32)
        with torch.no_grad():
            a = model(rgb, None).cls_logits[3]
            b = model(rgb, torch.rand(2, 1, 32, 32)).cls_logits[3]
        torch.testing.assert_close(a, b)
        assert not model.uses_ir


class TestDecoupledHead:

    def test_shape_contract(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        output = model(torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32))
        for level in (2, 3, 4, 5):
            side = 32 // 2 ** level
            assert output.cls_logits[level].shape == (2, 3, side, side)
            assert output.box_regs[level].shape == (2, 4, side, side)

    def test_zero_weights_give_bias(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        with torch.no_grad():
            for branch in model.head.cls_branches.values():
                branch[-1].weight.zero_()
        output = model(torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32))
        for logits in output.cls_logits.values():
            torch.testing.assert_close(logits, torch.full_like(logits, -4.6))

    def test_three_head_mode_drops_finest_level(self, tiny_model_config):
        cfg = tiny_model_config.model_copy(update={'use_p2_head': False})
        model = DetectorFactory.create_detector(cfg, seed=0)
        output = model(torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32))
        assert output.levels == (3, 4, 5)

    def test_missing_level_rejected(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        pyramid = {level: torch.rand(1, c, 2, 2) for level, c in tiny_model_config.pyramid_channels.items()}
        del pyramid[2]
        with pytest.raises(PyramidError):
            model.head(pyramid)


class TestBoxCoding:

    def test_decode_inverts_encode(self):
        box = torch.tensor([0.2, 0.3, 0.45, 0.6], dtype=torch.float64)
        distances = encode_box(box, 2, 1, 4, 4)
        torch.testing.assert_close(decode_box(distances, 2, 1, 4, 4), box)

    def test_positive_cell_clamped_to_grid(self):
        assert positive_cell(0.3, 0.6, 4, 4) == (2, 1)
        assert positive_cell(1.0, 1.0, 4, 4) == (3, 3)


class TestLoss:

    def test_level_assignment_by_size(self):
        assert assign_level(0.05, 0.02, (2, 3, 4, 5)) == 2
        assert assign_level(0.1, 0.05, (2, 3, 4, 5)) == 3
        assert assign_level(0.2, 0.1, (2, 3, 4, 5)) == 4
        assert assign_level(0.5, 0.1, (2, 3, 4, 5)) == 5
        assert assign_level(0.05, 0.02, (3, 4, 5)) == 3

    def test_centered_target_on_known_grid(self):
        output = make_output(size=16, levels=(2,))
        assignment = assign_targets(output, [torch.tensor([[0.0, 0.3, 0.6, 0.4, 0.4]])])[0]
        assert (assignment.level, assignment.row, assignment.col) == (2, 2, 1)

    def test_perfect_predictions_have_near_zero_loss(self):
        target = torch.tensor([[1.0, 0.4, 0.6, 0.2, 0.1]])
        output = make_output()
        row, col = positive_cell(0.4, 0.6, 4, 4)
        output.cls_logits[4][0, 1, row, col] = 30.0
        box = torch.tensor([0.3, 0.55, 0.5, 0.65])
        output.box_regs[4][0, :, row, col] = encode_box(box, row, col, 4, 4)
        loss = compute_loss(output, [target])
        assert loss.num_positives == 1
        assert float(loss.total) < 1e-3

    def test_empty_targets_give_zero_box_loss(self):
        loss = compute_loss(make_output(logit=0.0), [torch.zeros(0, 5)])
        assert float(loss.box) == 0.0
        assert float(loss.cls) > 0
        assert loss.num_positives == 0

    def test_loss_is_non_negative_and_differentiable(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        output = model(torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32))
        targets = [torch.tensor([[0.0, 0.5, 0.5, 0.3, 0.2]]), torch.tensor([[2.0, 0.2, 0.7, 0.1, 0.1]])]
        loss = compute_loss(output, targets)
        assert float(loss.total) >= 0
        loss.total.backward()
        assert model.head.box_branches['4'][-1].weight.grad is not None

    def test_full_model_loss_gradient_check(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0).double().eval()
        targets = [torch.tensor([[0.0, 0.3, 0.3, 0.05, 0.04], [2.0, 0.6, 0.6, 0.2, 0.25]],
                                dtype=torch.float64)]

        def total_loss(rgb, ir):
            return compute_loss(model(rgb, ir), targets).total

        report = grad_check(total_loss, [torch.rand(1, 3, 32, 32), torch.rand(1, 1, 32, 32)],
                            step=1e-4, tolerance=1e-3, max_elements=6)
        assert report.passed, report.message
        assert report.checked_elements == 12

    def test_regression_is_positive_at_initialisation(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        with torch.no_grad():
            for branch in model.head.box_branches.values():
                branch[-1].weight.zero_()
        output = model(torch.rand(1, 3, 32, 32), torch.rand(1, 1, 32, 32))
        for level in output.levels:
            torch.testing.assert_close(output.box_regs[level], torch.ones_like(output.box_regs[level]))

    def test_collapsed_regression_still_receives_gradient(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        with torch.no_grad():
            for branch in model.head.box_branches.values():
                branch[-1].weight.zero_()
                branch[-1].bias.fill_(-8.0)
        output = model(torch.rand(1, 3, 32, 32), torch.rand(1, 1, 32, 32))
        assert all(bool((output.box_regs[level] > 0).all()) for level in output.levels)
        loss = compute_loss(output, [torch.tensor([[1.0, 0.5, 0.5, 0.4, 0.4]])])
        loss.box.backward()
        bias_grad = model.head.box_branches['5'][-1].bias.grad
        assert bias_grad is not None
        assert float(bias_grad.abs().sum()) > 0

    @pytest.mark.parametrize('row', [[0.0, 0.5, 0.5, 0.0, 0.2], [0.0, 0.5, 0.5, 0.2, -0.1], [7.0, 0.5, 0.5, 0.2, 0.2]])
    def test_invalid_targets_rejected(self, row):
        with pytest.raises(TargetError):
            compute_loss(make_output(), [torch.tensor([row])])


class TestDecodeAndNms:

    def test_all_suppressed_logits_give_empty_list(self):
        output = make_output(batch=2, logit=-math.inf)
        assert decode_and_nms(output, 0.25, 0.6) == [[], []]

    def test_overlapping_boxes_suppressed_per_class(self):
        boxes = torch.tensor([[0.0, 0.0, 0.5, 0.5], [0.02, 0.0, 0.5, 0.5], [0.0, 0.0, 0.5, 0.5]])
        assert greedy_nms(boxes, torch.tensor([0, 0, 1]), 0.6) == [0, 2]

    def test_ties_broken_by_level_row_column(self):
        output = make_output(size=32)
        output.cls_logits[3][0, 0, 3, 1] = 2.0
        output.cls_logits[3][0, 0, 0, 2] = 2.0
        output.cls_logits[2][0, 0, 7, 7] = 2.0
        detections = decode_and_nms(output, 0.5, 0.6)[0]
        assert [(d.level, d.row, d.col) for d in detections] == [(2, 7, 7), (3, 0, 2), (3, 3, 1)]

    def test_sorted_by_descending_confidence(self):
        output = make_output(size=32)
        output.cls_logits[4][0, 2, 1, 1] = 1.0
        output.cls_logits[2][0, 0, 0, 0] = 3.0
        detections = decode_and_nms(output, 0.5, 0.6)[0]
        assert [d.confidence for d in detections] == sorted((d.confidence for d in detections), reverse=True)
        assert detections[0].class_id == 0

    def test_boxes_clipped_to_unit_square(self):
        output = make_output(size=32)
        output.cls_logits[5][0, 1, 0, 0] = 5.0
        output.box_regs[5][0, :, 0, 0] = 10.0
        box = decode_and_nms(output, 0.5, 0.6)[0][0].box
        assert box == (0.0, 0.0, 1.0, 1.0)

    @pytest.mark.parametrize('conf,iou', [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.5)])
    def test_thresholds_must_be_in_open_unit_interval(self, conf, iou):
        with pytest.raises(ValueError):
            decode_and_nms(make_output(), conf, iou)

    def test_detection_serialises_to_dict(self):
        data = Detection(1, 0.9, (0.1, 0.2, 0.3, 0.4), 3, 1, 2).to_dict()
        assert data['box'] == [0.1, 0.2, 0.3, 0.4] and data['level'] == 3


class TestDetectorFactory:

    @pytest.mark.parametrize('variant,neck', all_combinations())
    def test_every_grid_combination_builds_and_runs(self, variant, neck):
        cfg = ModelConfig(variant=variant, neck=neck, scale='n', img_size=32)
        model = DetectorFactory.create_detector(cfg, seed=0)
        output = model(torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32))
        assert output.levels == (2, 3, 4, 5)
        assert model.describe()['config_hash'] == config_hash(cfg)

    def test_same_seed_gives_same_weights(self, tiny_model_config):
        a = DetectorFactory.create_detector(tiny_model_config, seed=3)
        b = DetectorFactory.create_detector(tiny_model_config, seed=3)
        for (name, p), (_, q) in zip(a.named_parameters(), b.named_parameters()):
            torch.testing.assert_close(p, q, msg=name)

    def test_catalogue_lists_registered_variants(self):
        catalogue = DetectorFactory.get_variant_catalog()
        assert [entry['variant'] for entry in catalogue] == DetectorFactory.get_available_variants()
        assert {entry['variant']: entry['fusion'] for entry in catalogue}['single-stream'] is None

    def test_predict_restores_training_mode(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        model.train()
        detections = model.predict(torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32), 0.01, 0.6)
        assert len(detections) == 2
        assert model.training

    def test_gate_summary_after_forward(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        model(torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32))
        summary = model.gate_summary()
        assert sorted(summary) == [2, 3, 4, 5]
        assert all(0.0 < values['w_light'] < 1.0 for values in summary.values())


class TestDecorators:

    def test_rgb_only_zeroes_ir(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0).eval()
        rgb, ir = torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32)
        with torch.no_grad():
            masked = ModalityMaskDecorator(model, 'rgb')(rgb, ir).cls_logits[2]
            expected = model(rgb, torch.zeros_like(ir)).cls_logits[2]
        torch.testing.assert_close(masked, expected)

    def test_ir_only_zeroes_rgb(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0).eval()
        rgb, ir = torch.rand(2, 3, 32, 32), torch.rand(2, 1, 32, 32)
        with torch.no_grad():
            masked = ModalityMaskDecorator(model, 'ir')(rgb, ir).cls_logits[2]
            expected = model(torch.zeros_like(rgb), ir).cls_logits[2]
        torch.testing.assert_close(masked, expected)

    def test_unknown_modality_rejected(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config)
        with pytest.raises(ValueError):
            ModalityMaskDecorator(model, 'depth')

    def test_timing_counts_images_through_chain(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=0)
        timed = TimedDetectorDecorator(ModalityMaskDecorator(model, 'rgb'))
        assert timed.get_mean_latency_ms() == 0.0
        timed.predict(torch.rand(3, 3, 32, 32), torch.rand(3, 1, 32, 32), 0.5, 0.6)
        assert timed.images == 3 and timed.calls == 1
        assert timed.get_mean_latency_ms() > 0
        assert timed.detector is model
        info = timed.describe()
        assert info['modality'] == 'rgb' and info['timing']['images'] == 3

    def test_attribute_delegation(self, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config)
        timed = TimedDetectorDecorator(model)
        assert timed.cfg is model.cfg
        assert sum(p.numel() for p in timed.parameters()) == sum(p.numel() for p in model.parameters())


class TestCheckpoint:

    def test_round_trip(self, tmp_path, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config, seed=1)
        path = save_checkpoint(str(tmp_path / 'model.pt'), model, tiny_model_config, seed=1, epoch=4,
                               best_map=0.25)
        state = load_checkpoint(str(path), expected_hash=config_hash(tiny_model_config))
        assert (state.seed, state.epoch, state.best_map) == (1, 4, 0.25)
        restored = DetectorFactory.create_from_checkpoint(state)
        for (name, p), (_, q) in zip(model.state_dict().items(), restored.state_dict().items()):
            torch.testing.assert_close(p, q, msg=name)

    def test_hash_mismatch_rejected(self, tmp_path, tiny_model_config):
        model = DetectorFactory.create_detector(tiny_model_config)
        path = save_checkpoint(str(tmp_path / 'model.pt'), model, tiny_model_config, seed=0, epoch=1)
        other = config_hash(tiny_model_config.model_copy(update={'use_gad': False}))
        with pytest.raises(CheckpointError, match='difere'):
            load_checkpoint(str(path), expected_hash=other)

    def test_foreign_file_rejected(self, tmp_path):
        path = tmp_path / 'other.pt'
        torch.save({'weights': torch.ones(2)}, path)
        with pytest.raises(CheckpointError):
            load_checkpoint(str(path))
        with pytest.raises(CheckpointError, match='inexistente'):
            load_checkpoint(str(tmp_path / 'missing.pt'))


class TestAblationGrids:

    def test_fusion_neck_rows(self):
        labels = [row.label for row in get_grid('fusion-neck')]
        assert labels == ['Concat + FPN', 'Concat + HFAN', 'Uni-Mamba + FPN', 'Bi-Mamba + FPN',
                          'DGC-Gate + FPN', 'DGC-Gate + HFAN (full)']

    def test_hfan_component_rows(self):
        labels = [row.label for row in get_grid('hfan-components')]
        assert labels == ['Full Model', 'w/o HS', 'w/o CRU', 'w/o GAD', 'w/o AWF', 'FPN Baseline']

    def test_exactly_one_reference_per_grid(self):
        for name in available_grids():
            assert sum(row.reference for row in ABLATION_GRIDS[name]) == 1

    def test_rows_apply_to_valid_configurations(self):
        base = RunConfig()
        for name in available_grids():
            for row in get_grid(name):
                cfg = row.apply(base)
                assert cfg.modality == row.modality
                assert cfg.model.neck in VALID_COMBINATIONS[cfg.model.variant]

    def test_unknown_grid_rejected(self):
        with pytest.raises(ConfigError, match='desconhecida'):
            get_grid('table-9')


class TestDetectionProperties:

    def test_nms_is_idempotent(self):
        output = make_output(size=32)
        torch.manual_seed(1)
        for level in output.levels:
            output.cls_logits[level] = torch.randn_like(output.cls_logits[level]) * 3
            output.box_regs[level] = torch.rand_like(output.box_regs[level]) * 2
        detections = decode_and_nms(output, 0.3, 0.5)[0]
        assert detections
        assert nms_detections(detections, 0.5) == detections

    def test_encoding_a_decoded_box_reproduces_regression(self):
        torch.manual_seed(2)
        distances = torch.rand(20, 4, dtype=torch.float64) + 0.1
        for row, col in [(0, 0), (1, 3), (3, 2)]:
            boxes = decode_box(distances, row, col, 4, 4)
            torch.testing.assert_close(encode_box(boxes, row, col, 4, 4), distances, atol=1e-6, rtol=0)
