"""Командная строка: симуляция, обнаружение, оценка, сервис"""
