"""
Точка входа командной строки

    python -m src.cli.main sim run --scenario s2 --variant 3 --seed 7 --out results/
    python -m src.cli.main sim sweep --scenario s1 --seeds 50 --out results/
    python -m src.cli.main detect synth --rows 44489 --seed 0 --out data/synth.csv
    python -m src.cli.main detect train --data data/synth.csv --model models/crdm.bin --holdout 0.2
    python -m src.cli.main detect eval --data data/synth.csv --model models/crdm.bin --holdout 0.2 --report eval.json
    python -m src.cli.main detect predict --data data/synth.csv --model models/crdm.bin --out predictions.csv
    python -m src.cli.main serve --model models/crdm.bin --port 8080 --api-key-file key.txt

Коды выхода: 0 успех, 1 ошибка использования, 2 ошибка данных или
валидации, 3 ошибка ввода-вывода.
"""
import argparse
import asyncio
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, NoReturn, Optional

from dotenv import load_dotenv

from src.alertserve.app import serve
from src.alertserve.notifier import notifier_from_config
from src.core.config import ServeConfig, TrainConfig, load_sop_table, read_api_key
from src.core.errors import (
    ConfigError,
    DataFormatError,
    SweepRunError,
    UndefinedMetricError,
    UnknownScenarioError,
    UsageError,
)
from src.core.logger import set_level, setup_logger
from src.detect.batch import batch_predict
from src.detect.model import train
from src.detect.storage import load_model, save_model
from src.evaluation.report import evaluate, format_confusion
from src.flows.reader import read_flows_csv, write_flows_csv
from src.flows.split import split
from src.flows.synth import Separability, SynthSpec, synth_dataset
from src.sim.engine import run
from src.sim.export import export_sweep, export_timeseries
from src.sim.scenario import resolve_scenario, sweep


# Загружаем переменные окружения
load_dotenv()

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class CliParser(argparse.ArgumentParser):
    """ArgumentParser, который сообщает об ошибке исключением вместо exit(2)"""
    
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _scenario_key(scenario: str) -> str:
    path = Path(scenario)
    return path.stem if path.suffix else scenario.strip().lower()


# --- sim ---------------------------------------------------------------------

def cmd_sim_run(args: argparse.Namespace) -> int:
    specs = resolve_scenario(args.scenario)
    if not 1 <= args.variant <= len(specs):
        raise UsageError(f"--variant должен быть от 1 до {len(specs)} для сценария {args.scenario}")
    spec = specs[args.variant - 1]
    result = run(spec, args.seed)
    out = Path(args.out)
    stem = f"{spec.name}_seed{args.seed}"
    export_timeseries(result, out / f"{stem}.csv")
    summary_path = out / f"{stem}.summary.json"
    try:
        summary_path.write_text(result.to_json() + "\n", encoding="utf-8")
    except OSError as e:
        raise OSError(f"не удалось записать {summary_path}: {e}") from e
    print(result.to_json())
    return EXIT_OK


def cmd_sim_sweep(args: argparse.Namespace) -> int:
    if args.seeds < 1:
        raise UsageError("--seeds должен быть не меньше 1")
    specs = resolve_scenario(args.scenario)
    result = sweep(specs, list(range(1, args.seeds + 1)), workers=args.workers)
    path = export_sweep(result, Path(args.out) / f"{_scenario_key(args.scenario)}_sweep.csv")
    print(f"Ось: {result.axis}")
    for agg in result.aggregates:
        ttc = "-" if agg.mean_time_to_containment is None else f"{agg.mean_time_to_containment:.1f}"
        print(
            f"  {agg.axis_value}: прогонов {agg.runs}, пик {agg.mean_peak_fraction:.3f}, "
            f"финал {agg.mean_final_fraction:.3f}, сдерживание {ttc}"
        )
    print(f"Записано: {path}")
    return EXIT_OK


# --- detect ------------------------------------------------------------------

def _train_config(args: argparse.Namespace) -> TrainConfig:
    base = TrainConfig.from_env()
    if getattr(args, "exclude_identifiers", False):
        return replace(base, exclude_identifiers=True)
    return base


def cmd_detect_synth(args: argparse.Namespace) -> int:
    if args.noise > 0:
        spec = SynthSpec(row_count=args.rows, separability=Separability.NOISY, noise_rate=args.noise, seed=args.seed)
    else:
        spec = SynthSpec(row_count=args.rows, seed=args.seed)
    dataset = synth_dataset(spec)
    path = write_flows_csv(dataset, args.out)
    print(f"Записано {len(dataset)} потоков в {path}: {dataset.class_counts()}")
    return EXIT_OK


def cmd_detect_train(args: argparse.Namespace) -> int:
    dataset = read_flows_csv(args.data, strict=True)
    if args.holdout:
        dataset, _ = split(dataset, args.holdout, args.seed, stratified=True)
    model = train(dataset, _train_config(args), seed=args.seed)
    save_model(model, args.model)
    print("Кандидаты (macro-F1 на валидации):")
    for candidate in model.selection_report:
        marker = "*" if candidate.name == model.classifier_name else " "
        print(f" {marker} {candidate.name:<14} {candidate.macro_f1:.6f}")
    print(f"Классы: {model.class_order}")
    print(f"Версия: {model.version}")
    return EXIT_OK


def cmd_detect_eval(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    dataset = read_flows_csv(args.data, strict=False)
    if args.holdout:
        _, dataset = split(dataset, args.holdout, args.seed, stratified=True)
    report = evaluate(model, dataset, _train_config(args), seed=args.seed)
    print(format_confusion(report.confusion))
    print(f"micro-F1: {report.f1_micro:.6f}  macro-F1: {report.f1_macro:.6f}")
    print(f"ROC AUC: {report.roc_auc_macro_ovr:.6f}  PR AUC: {report.pr_auc_macro_ovr:.6f}  log loss: {report.log_loss:.6f}")
    if report.importances:
        print("Важность признаков (топ-10):")
        for name, score in report.importances[:10]:
            print(f"  {name:<32} {score:.6f}")
    if args.report:
        print(f"Отчёт: {report.save(args.report)}")
    return EXIT_OK


def cmd_detect_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    report = batch_predict(model, args.data, args.out)
    print(report.summary())
    return EXIT_OK


# --- serve -------------------------------------------------------------------

async def _serve_forever(args: argparse.Namespace) -> None:
    cfg = ServeConfig.from_env()
    if not cfg.api_key:
        if not args.api_key_file:
            raise UsageError("нужен --api-key-file или переменная CRDM_API_KEY")
        cfg.api_key = read_api_key(args.api_key_file)
    if args.sop_table:
        cfg.sop_table = load_sop_table(args.sop_table)
    if args.port is not None:
        cfg.port = args.port
    if args.host:
        cfg.host = args.host
    cfg.validate()
    model = load_model(args.model)
    service = await serve(model, cfg, notifier_from_config(cfg))
    print(f"Сервис: http://{cfg.host}:{cfg.port}/v1/health, журналы: {Path(cfg.log_dir).resolve()}")
    try:
        await asyncio.Event().wait()
    finally:
        await service.stop()


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        asyncio.run(_serve_forever(args))
    except KeyboardInterrupt:
        logger.info("Сервис остановлен пользователем")
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> CliParser:
    parser = CliParser(prog="crdm", description="Симуляция киберзащиты и обнаружение атак по потокам")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="подробные логи (DEBUG)")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="только предупреждения и ошибки")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)
    
    sim = commands.add_parser("sim", help="агентная симуляция атак")
    sim_commands = sim.add_subparsers(dest="sim_command", required=True, parser_class=CliParser)
    
    sim_run = sim_commands.add_parser("run", help="один прогон сценария")
    sim_run.add_argument("--scenario", required=True, help="s1|s2|s3|s4 или путь к файлу сценария")
    sim_run.add_argument("--variant", type=int, default=1, help="номер варианта сценария (с 1)")
    sim_run.add_argument("--seed", type=int, default=1, help="зерно генератора")
    sim_run.add_argument("--out", required=True, help="каталог результатов")
    sim_run.set_defaults(handler=cmd_sim_run)
    
    sim_sweep = sim_commands.add_parser("sweep", help="все варианты × seed 1..N")
    sim_sweep.add_argument("--scenario", required=True, help="s1|s2|s3|s4 или путь к файлу сценария")
    sim_sweep.add_argument("--seeds", type=int, default=50, help="количество seed (1..N)")
    sim_sweep.add_argument("--out", required=True, help="каталог результатов")
    sim_sweep.add_argument("--workers", type=int, default=1, help="количество процессов")
    sim_sweep.set_defaults(handler=cmd_sim_sweep)
    
    detect = commands.add_parser("detect", help="обнаружение атак по потокам CICIDS2017")
    detect_commands = detect.add_subparsers(dest="detect_command", required=True, parser_class=CliParser)
    
    synth_parser = detect_commands.add_parser("synth", help="синтетический набор потоков")
    synth_parser.add_argument("--rows", type=int, default=44489, help="количество строк")
    synth_parser.add_argument("--seed", type=int, default=0, help="зерно генератора")
    synth_parser.add_argument("--noise", type=float, default=0.0, help="доля строк с признаками чужого класса")
    synth_parser.add_argument("--out", required=True, help="выходной CSV")
    synth_parser.set_defaults(handler=cmd_detect_synth)
    
    train_parser = detect_commands.add_parser("train", help="обучение и выбор модели")
    train_parser.add_argument("--data", required=True, help="размеченный CSV")
    train_parser.add_argument("--model", required=True, help="файл модели для записи")
    train_parser.add_argument("--seed", type=int, default=0, help="зерно разбиений")
    train_parser.add_argument("--holdout", type=float, default=0.0, help="доля тестовой части, исключаемой из обучения")
    train_parser.add_argument("--exclude-identifiers", action="store_true", help="не использовать IP, время и порт источника")
    train_parser.set_defaults(handler=cmd_detect_train)
    
    eval_parser = detect_commands.add_parser("eval", help="оценка модели")
    eval_parser.add_argument("--data", required=True, help="размеченный CSV")
    eval_parser.add_argument("--model", required=True, help="файл модели")
    eval_parser.add_argument("--seed", type=int, default=0, help="зерно разбиения и перестановок")
    eval_parser.add_argument("--holdout", type=float, default=0.0, help="оценивать только тестовую часть разбиения")
    eval_parser.add_argument("--report", help="JSON файл отчёта")
    eval_parser.set_defaults(handler=cmd_detect_eval)
    
    predict_parser = detect_commands.add_parser("predict", help="пакетное предсказание")
    predict_parser.add_argument("--data", required=True, help="входной CSV")
    predict_parser.add_argument("--model", required=True, help="файл модели")
    predict_parser.add_argument("--out", required=True, help="выходной CSV")
    predict_parser.set_defaults(handler=cmd_detect_predict)
    
    serve_parser = commands.add_parser("serve", help="HTTP сервис предсказаний")
    serve_parser.add_argument("--model", required=True, help="файл модели")
    serve_parser.add_argument("--port", type=int, default=None, help="порт (по умолчанию CRDM_PORT или 8080)")
    serve_parser.add_argument("--host", default=None, help="адрес (по умолчанию CRDM_HOST или 127.0.0.1)")
    serve_parser.add_argument("--api-key-file", default=None, help="файл с API ключом (CRDM_API_KEY имеет приоритет)")
    serve_parser.add_argument("--sop-table", default=None, help="JSON таблица важность -> SOP")
    serve_parser.set_defaults(handler=cmd_serve)
    
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Разбирает аргументы, выполняет команду и возвращает код выхода"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            set_level(logging.DEBUG)
        elif args.quiet:
            set_level(logging.WARNING)
        return args.handler(args)
    except (UsageError, UnknownScenarioError) as e:
        print(f"Ошибка: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DataFormatError, UndefinedMetricError, SweepRunError) as e:
        field = getattr(e, "field", None)
        print(f"Ошибка данных{f' ({field})' if field else ''}: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"Ошибка ввода-вывода: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
