"""Загрузка сетевых потоков в схеме CICIDS2017"""
