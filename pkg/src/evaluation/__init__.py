"""Метрики качества классификации и важность признаков"""
