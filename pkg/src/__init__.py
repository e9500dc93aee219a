"""Симулятор кибератак и детектор угроз по сетевым потокам"""
__version__ = "1.0.0"
