"""HTTP клиент сервиса предсказаний для систем мониторинга"""
from typing import Any, Dict, Mapping, Optional

import httpx

from src.alertserve.app import API_KEY_HEADER
from src.core.logger import setup_logger


logger = setup_logger(__name__)


class AlertClient:
    """Асинхронный клиент /v1 API"""
    
    def __init__(self, base_url: str, api_key: str, timeout: float = 10.0):
        """
        Args:
            base_url: Адрес сервиса, например http://127.0.0.1:8080
            api_key: Ключ для заголовка X-Api-Key
            timeout: Таймаут запроса в секундах
        """
        self.client = httpx.AsyncClient(
            base_url=base_url,
            headers={API_KEY_HEADER: api_key},
            timeout=timeout,
        )
    
    async def __aenter__(self) -> "AlertClient":
        return self
    
    async def __aexit__(self, *exc_info: Any) -> None:
        await self.close()
    
    async def close(self) -> None:
        await self.client.aclose()
    
    async def _request(self, method: str, path: str, body: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
        try:
            response = await self.client.request(method, path, json=body)
            response.raise_for_status()
        except httpx.HTTPStatusError as e:
            logger.error(f"{method} {path}: HTTP {e.response.status_code} {e.response.text}")
            raise
        return response.json()
    
    async def health(self) -> Dict[str, Any]:
        return await self._request("GET", "/v1/health")
    
    async def predict(self, flow: Mapping[str, Any]) -> Dict[str, Any]:
        """
        Отправляет один поток на предсказание
        
        Args:
            flow: Колонки схемы CICIDS2017 и их значения
        
        Returns:
            Ответ сервиса: alert_id, classes, scores, predicted, severity, sop_id, model_version
        """
        return await self._request("POST", "/v1/predict", flow)
    
    async def feedback(self, alert_id: int, actual_label: str) -> Dict[str, Any]:
        return await self._request("POST", "/v1/feedback", {"alert_id": alert_id, "actual_label": actual_label})
    
    async def drift(self) -> Dict[str, Any]:
        return await self._request("GET", "/v1/drift")
