"""Предобработка, обучение и применение моделей обнаружения атак"""
