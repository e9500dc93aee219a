"""Агентная симуляция атак на защищённую сеть"""
