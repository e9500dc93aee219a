"""HTTP сервис предсказаний на aiohttp"""
import hmac
import json
from pathlib import Path
from typing import Any, Awaitable, Callable, Dict, Optional

from aiohttp import web

from src.alertserve.feedback import evaluate_feedback
from src.alertserve.notifier import AlertNotifier
from src.alertserve.severity import categorize
from src.alertserve.store import AlertStore, FeedbackEntry, FeedbackStore
from src.core.config import ServeConfig
from src.core.errors import DataFormatError, UnknownAlertError
from src.core.logger import setup_logger
from src.detect.model import TrainedModel, predict
from src.flows.reader import record_from_mapping


logger = setup_logger(__name__)

API_KEY_HEADER = "X-Api-Key"
PUBLIC_PATHS = {"/v1/health"}

Handler = Callable[[web.Request], Awaitable[web.StreamResponse]]


def _error(status: int, message: str, field: Optional[str] = None) -> web.Response:
    body: Dict[str, Any] = {"error": message}
    if field is not None:
        body["field"] = field
    return web.json_response(body, status=status)


class AlertService:
    """
    Сервис поверх неизменяемой модели
    
    Каждый запрос /v1/predict записывается в журнал алертов, алерты не ниже
    заданной важности уходят в notifier.
    """
    
    def __init__(
        self,
        model: TrainedModel,
        cfg: ServeConfig,
        notifier: Optional[AlertNotifier] = None,
    ):
        self.model = model
        self.cfg = cfg
        self.notifier = notifier
        log_dir = Path(cfg.log_dir)
        self.alerts = AlertStore(log_dir / "alerts.ndjson")
        self.feedback = FeedbackStore(log_dir / "feedback.ndjson", self.alerts)
        self.runner: Optional[web.AppRunner] = None
        self.app = self.create_app()
    
    def create_app(self) -> web.Application:
        app = web.Application(
            client_max_size=self.cfg.max_body_bytes,
            middlewares=[self._errors_middleware, self._auth_middleware],
        )
        app.router.add_get("/v1/health", self.health)
        app.router.add_post("/v1/predict", self.handle_predict)
        app.router.add_post("/v1/feedback", self.handle_feedback)
        app.router.add_get("/v1/drift", self.handle_drift)
        app.on_cleanup.append(self._on_cleanup)
        return app
    
    @web.middleware
    async def _errors_middleware(self, request: web.Request, handler: Handler) -> web.StreamResponse:
        try:
            return await handler(request)
        except web.HTTPException:
            raise
        except DataFormatError as e:
            return _error(400, str(e), e.field)
        except UnknownAlertError as e:
            return _error(404, str(e), "alert_id")
        except Exception as e:
            logger.error(f"Ошибка обработки {request.method} {request.path}: {e}", exc_info=True)
            return _error(500, "внутренняя ошибка сервиса")
    
    @web.middleware
    async def _auth_middleware(self, request: web.Request, handler: Handler) -> web.StreamResponse:
        if request.path in PUBLIC_PATHS:
            return await handler(request)
        provided = request.headers.get(API_KEY_HEADER, "")
        if not provided or not hmac.compare_digest(provided.encode("utf-8"), self.cfg.api_key.encode("utf-8")):
            logger.warning(f"Отклонён запрос {request.method} {request.path}: неверный API ключ")
            return _error(401, "неверный или отсутствующий API ключ")
        return await handler(request)
    
    async def _json_object(self, request: web.Request) -> Dict[str, Any]:
        try:
            body = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise DataFormatError(f"тело запроса не JSON: {e}", field="body") from e
        if not isinstance(body, dict):
            raise DataFormatError("тело запроса должно быть объектом поле/значение", field="body")
        return body
    
    async def health(self, request: web.Request) -> web.Response:
        return web.json_response({
            "status": "ok",
            "model_version": self.model.version,
            "classifier": self.model.classifier_name,
            "classes": self.model.class_order,
        })
    
    async def handle_predict(self, request: web.Request) -> web.Response:
        body = await self._json_object(request)
        record = record_from_mapping(body)
        result = predict(self.model, record)
        severity, sop_id = categorize(result, self.cfg)
        alert = self.alerts.issue(result, severity, sop_id, self.model.version, flow_id=record.flow_id)
        logger.info(
            f"Алерт {alert.alert_id}: {result.predicted} ({severity}), "
            f"источник {record.source_ip or '-'}"
        )
        if self.notifier is not None and self.notifier.should_notify(alert):
            await self.notifier.notify(alert)
        return web.json_response({
            "alert_id": alert.alert_id,
            "classes": result.classes,
            "scores": result.scores,
            "predicted": result.predicted,
            "severity": severity,
            "sop_id": sop_id,
            "model_version": self.model.version,
        })
    
    async def handle_feedback(self, request: web.Request) -> web.Response:
        body = await self._json_object(request)
        alert_id = body.get("alert_id")
        if isinstance(alert_id, bool) or not isinstance(alert_id, int):
            raise DataFormatError("alert_id должен быть целым числом", field="alert_id")
        label = body.get("actual_label")
        if not isinstance(label, str) or not label.strip():
            raise DataFormatError("actual_label должен быть непустой строкой", field="actual_label")
        entry, created = self.feedback.record(FeedbackEntry(alert_id, label.strip()))
        return web.json_response(
            {"alert_id": entry.alert_id, "actual_label": entry.actual_label, "recorded": created},
            status=201 if created else 200,
        )
    
    async def handle_drift(self, request: web.Request) -> web.Response:
        report = evaluate_feedback(self.alerts.snapshot(), self.feedback.entries(), self.cfg)
        return web.json_response(report.to_dict())
    
    async def _on_cleanup(self, app: web.Application) -> None:
        if self.notifier is not None:
            await self.notifier.close()
    
    async def start(self, host: Optional[str] = None, port: Optional[int] = None) -> None:
        """Запускает HTTP сервер; OSError при занятом порте"""
        self.runner = web.AppRunner(self.app)
        await self.runner.setup()
        site = web.TCPSite(self.runner, host or self.cfg.host, self.cfg.port if port is None else port)
        try:
            await site.start()
        except OSError:
            await self.runner.cleanup()
            self.runner = None
            raise
        logger.info(
            f"Сервис запущен на {host or self.cfg.host}:{self.cfg.port if port is None else port}, "
            f"модель {self.model.version[:12]}, журналы в {Path(self.cfg.log_dir).resolve()}"
        )
    
    async def stop(self) -> None:
        if self.runner is not None:
            await self.runner.cleanup()
            self.runner = None
            logger.info("Сервис остановлен")


async def serve(
    model: TrainedModel,
    cfg: ServeConfig,
    notifier: Optional[AlertNotifier] = None,
) -> AlertService:
    """
    Запускает сервис и возвращает его дескриптор
    
    Args:
        model: Загруженная модель
        cfg: Конфигурация сервиса
        notifier: Получатель уведомлений
    
    Returns:
        Запущенный сервис; остановка через stop()
    """
    cfg.validate()
    service = AlertService(model, cfg, notifier)
    await service.start()
    return service
