"""
Ponto de entrada da linha de comandos.

    python -m cli train --variant full --neck hfan --epochs 30
    python -m cli eval --checkpoint runs/best.pt --dump-gates
    python -m cli ablate fusion-neck --seeds 0 1 2
    python -m cli visualize --checkpoint runs/best.pt --samples scene_01000000
    python -m cli serve --port 5000

Cada flag sobrepõe a chave correspondente do ficheiro --config.
"""
import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from config.logging_setup import setup_logging
from config.settings import VALID_COMBINATIONS, VARIANTS, ConfigError, load_run_config
from data.samples import DatasetError
from evaluation.report import format_ablation_table
from factories.ablation_grids import available_grids
from models.backbone import BackboneInputError
from models.checkpoint import CheckpointError
from cli.commands import cmd_ablate, cmd_eval, cmd_serve, cmd_train, cmd_visualize
from cli.trainer import TrainingDivergedError


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_INVALID = 2

# flag → chave pontuada da RunConfig
FLAG_KEYS: Dict[str, str] = {
    'seed': 'seed',
    'out': 'out_dir',
    'data': 'data',
    'variant': 'model.variant',
    'neck': 'model.neck',
    'scale': 'model.scale',
    'img_size': 'model.img_size',
    'epochs': 'epochs',
    'batch': 'batch_size',
    'lr': 'lr',
    'modality': 'modality',
    'resume': 'resume',
}

MODEL_FLAGS = ('variant', 'neck', 'scale', 'img_size')


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='ficheiro YAML de configuração')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--out', help='diretório de saída')
    parser.add_argument('--data', help="'synthetic' ou diretório no formato YOLO")
    parser.add_argument('--variant', choices=VARIANTS)
    parser.add_argument('--neck', choices=('fpn', 'hfan'))
    parser.add_argument('--scale', choices=('n', 's', 'm'))
    parser.add_argument('--img-size', dest='img_size', type=int)
    parser.add_argument('--epochs', type=int)
    parser.add_argument('--batch', type=int)
    parser.add_argument('--lr', type=float)
    parser.add_argument('--modality', choices=('both', 'rgb', 'ir'))
    parser.add_argument('--log-level', dest='log_level', default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='cli', description='Detetor RGB+IR com fusão Mamba')
    commands = parser.add_subparsers(dest='command', required=True)

    train = commands.add_parser('train', help='treinar um detetor')
    _add_common(train)
    train.add_argument('--resume', help='checkpoint a partir do qual continuar')

    evaluate = commands.add_parser('eval', help='mAP@.5 de um checkpoint')
    _add_common(evaluate)
    evaluate.add_argument('--checkpoint', required=True)
    evaluate.add_argument('--split', choices=('train', 'val'), default='val')
    evaluate.add_argument('--dump-gates', dest='dump_gates', action='store_true')

    ablate = commands.add_parser('ablate', help='grelha de ablação')
    ablate.add_argument('grid', help=f"uma de: {', '.join(available_grids())}")
    _add_common(ablate)
    ablate.add_argument('--seeds', type=int, nargs='+')

    visualize = commands.add_parser('visualize', help='sobreposições TP/FP/FN')
    _add_common(visualize)
    visualize.add_argument('--checkpoint', required=True)
    visualize.add_argument('--samples', nargs='+', required=True)
    visualize.add_argument('--split', choices=('train', 'val'), default='val')

    serve = commands.add_parser('serve', help='serviço HTTP de inferência')
    serve.add_argument('--host', default='0.0.0.0')
    serve.add_argument('--port', type=int, default=5000)
    serve.add_argument('--log-level', dest='log_level', default=None)
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Sobreposições pontuadas a partir das flags dadas.

    --variant sem --neck escolhe 'hfan' se a combinação for admitida,
    senão o primeiro pescoço admitido para a variante.
    """
    overrides = {key: getattr(args, flag) for flag, key in FLAG_KEYS.items()
                 if getattr(args, flag, None) is not None}
    variant = getattr(args, 'variant', None)
    if variant is not None and getattr(args, 'neck', None) is None:
        necks = VALID_COMBINATIONS[variant]
        overrides['model.neck'] = 'hfan' if 'hfan' in necks else necks[0]
    overrides['command'] = args.command
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    if args.command == 'serve':
        cmd_serve(args.host, args.port)
        return EXIT_OK

    try:
        cfg = load_run_config(args.config, collect_overrides(args))
        if args.command == 'train':
            result = cmd_train(cfg)
            logger.info("melhor mAP@.5 = %.4f (%s)", max(result.history.final_map, 0.0), result.best_path)
        elif args.command == 'eval':
            strict = args.config is not None or any(getattr(args, f) is not None for f in MODEL_FLAGS)
            report = cmd_eval(cfg, args.checkpoint, split=args.split, strict_config=strict,
                              dump_gates=args.dump_gates)
            print(f"mAP@.5 = {report['map50']:.4f}")
        elif args.command == 'ablate':
            rows = cmd_ablate(args.grid, cfg, args.seeds)
            print(format_ablation_table(rows))
        elif args.command == 'visualize':
            for overlay in cmd_visualize(cfg, args.checkpoint, args.samples, split=args.split):
                print(f"{overlay.path}  TP={overlay.true_positives} "
                      f"FP={overlay.false_positives} FN={overlay.false_negatives}")
    except (ConfigError, DatasetError, CheckpointError, BackboneInputError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID
    except TrainingDivergedError as exc:
        logger.error("%s", exc)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
