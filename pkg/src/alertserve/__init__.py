"""Сервис предсказаний в реальном времени: алерты, SOP и обратная связь"""
