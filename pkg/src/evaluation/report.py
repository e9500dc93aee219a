"""Сводный отчёт об оценке модели"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd

from src.core.config import TrainConfig
from src.core.errors import DataFormatError
from src.core.logger import setup_logger
from src.detect.model import TrainedModel, argmax_rows, label_indices, predict_frame
from src.evaluation.importance import permutation_importance
from src.evaluation.metrics import (
    ConfusionMatrix,
    confusion_from_indices,
    f1,
    log_loss,
    pr_auc,
    roc_auc,
)
from src.flows.schema import LABEL, Dataset


logger = setup_logger(__name__)

REPORT_SCHEMA = "crdm.eval-report/1"


@dataclass
class EvalReport:
    """Метрики модели на размеченном наборе"""
    confusion: ConfusionMatrix
    f1_micro: float
    f1_macro: float
    roc_auc_macro_ovr: float
    pr_auc_macro_ovr: float
    log_loss: float
    importances: List[Tuple[str, float]] = field(default_factory=list)
    model_version: str = ""
    source: str = ""
    
    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": REPORT_SCHEMA,
            "model_version": self.model_version,
            "source": self.source,
            "records": self.confusion.total,
            "confusion": self.confusion.to_dict(),
            "f1_micro": self.f1_micro,
            "f1_macro": self.f1_macro,
            "roc_auc_macro_ovr": self.roc_auc_macro_ovr,
            "pr_auc_macro_ovr": self.pr_auc_macro_ovr,
            "log_loss": self.log_loss,
            "importances": [{"feature": name, "score": score} for name, score in self.importances],
        }
    
    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)
    
    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json() + "\n", encoding="utf-8")
        except OSError as e:
            raise OSError(f"не удалось записать отчёт {path}: {e}") from e
        return path


def format_confusion(cm: ConfusionMatrix) -> str:
    """Текстовая матрица ошибок с колонкой Dropped"""
    header = ["True \\ Predicted"] + list(cm.class_order) + ["Dropped"]
    rows = [header]
    for i, name in enumerate(cm.class_order):
        rows.append([name] + [str(int(v)) for v in cm.counts[i]] + [str(int(cm.dropped[i]))])
    widths = [max(len(row[j]) for row in rows) for j in range(len(header))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [cell.rjust(widths[j]) for j, cell in enumerate(row) if j > 0]
        lines.append("  ".join(cells))
    return "\n".join(lines)


def evaluate(
    model: TrainedModel,
    dataset: Dataset,
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    with_importance: bool = True,
) -> EvalReport:
    """
    Оценивает модель на размеченном наборе
    
    Отклонённые при чтении строки с известной меткой попадают в колонку Dropped.
    
    Args:
        model: Обученная модель
        dataset: Размеченный набор (rejected учитываются)
        config: Параметры важности признаков
        seed: Зерно перестановок
        with_importance: Считать перестановочную важность
    
    Returns:
        Отчёт об оценке
    """
    config = config or TrainConfig()
    if len(dataset) and not dataset.labeled:
        raise DataFormatError("в наборе для оценки есть записи без метки", field=LABEL)
    
    class_order = model.class_order
    truths = list(dataset.frame[LABEL])
    y_true = label_indices(dataset.frame[LABEL], class_order)
    dropped_labels = [row.label for row in dataset.rejected if row.label is not None]
    dropped_idx = label_indices(pd.Series(dropped_labels, dtype=object), class_order)
    
    proba = predict_frame(model, dataset.frame)
    y_pred = argmax_rows(proba, class_order)
    cm = confusion_from_indices(y_true, y_pred, class_order, dropped_idx)
    micro, macro = f1(cm)
    
    importances: List[Tuple[str, float]] = []
    if with_importance and len(dataset):
        importances = permutation_importance(
            model,
            dataset,
            repeats=config.importance_repeats,
            seed=seed,
            max_rows=config.importance_max_rows,
        )
    
    report = EvalReport(
        confusion=cm,
        f1_micro=micro,
        f1_macro=macro,
        roc_auc_macro_ovr=roc_auc(proba, truths, class_order),
        pr_auc_macro_ovr=pr_auc(proba, truths, class_order),
        log_loss=log_loss(proba, truths, class_order),
        importances=importances,
        model_version=model.version,
        source=dataset.source,
    )
    logger.info(
        f"Оценка на {dataset.source}: micro-F1 {micro:.6f}, macro-F1 {macro:.6f}, "
        f"ROC AUC {report.roc_auc_macro_ovr:.6f}, PR AUC {report.pr_auc_macro_ovr:.6f}, "
        f"log loss {report.log_loss:.6f}, отброшено {int(cm.dropped.sum())}"
    )
    return report
