"""Уведомления об алертах в Telegram"""
import html
from typing import Optional

from aiogram import Bot
from aiogram.client.default import DefaultBotProperties
from aiogram.enums import ParseMode

from src.alertserve.severity import severity_rank
from src.alertserve.store import Alert
from src.core.config import ServeConfig
from src.core.logger import setup_logger


logger = setup_logger(__name__)


class AlertNotifier:
    """Получатель алертов не ниже заданной важности"""
    
    def __init__(self, min_severity: str = "high"):
        self.min_severity = min_severity
    
    def should_notify(self, alert: Alert) -> bool:
        return alert.severity != "none" and severity_rank(alert.severity) >= severity_rank(self.min_severity)
    
    async def notify(self, alert: Alert) -> None:
        """Базовый получатель только фильтрует; доставку добавляют подклассы"""
        return None
    
    async def close(self) -> None:
        return None


def format_alert(alert: Alert) -> str:
    """HTML текст уведомления"""
    score = alert.prediction.score_of(alert.prediction.predicted)
    lines = [
        f"<b>Алерт #{alert.alert_id}</b>: {html.escape(alert.prediction.predicted)}",
        f"Важность: <b>{alert.severity}</b> (скор {score:.4f})",
        f"SOP: {html.escape(alert.sop_id or '-')}",
    ]
    if alert.flow_id:
        lines.append(f"Поток: <code>{html.escape(alert.flow_id)}</code>")
    lines.append(f"Модель: <code>{alert.model_version[:12]}</code>")
    return "\n".join(lines)


class TelegramNotifier(AlertNotifier):
    """Отправляет алерты в чат через aiogram"""
    
    def __init__(self, token: str, chat_id: str, min_severity: str = "high"):
        super().__init__(min_severity)
        self.chat_id = chat_id
        self.bot = Bot(token=token, default=DefaultBotProperties(parse_mode=ParseMode.HTML))
    
    async def notify(self, alert: Alert) -> None:
        try:
            await self.bot.send_message(chat_id=self.chat_id, text=format_alert(alert))
        except Exception as e:
            # Ошибки доставки только логируются
            logger.error(f"Ошибка отправки алерта {alert.alert_id} в Telegram: {e}", exc_info=True)
    
    async def close(self) -> None:
        await self.bot.session.close()


def notifier_from_config(cfg: ServeConfig) -> Optional[AlertNotifier]:
    if not cfg.telegram_enabled:
        return None
    logger.info(f"Уведомления в Telegram включены для важности >= {cfg.notify_severity}")
    return TelegramNotifier(cfg.telegram_bot_token, str(cfg.telegram_alert_chat_id), cfg.notify_severity)
