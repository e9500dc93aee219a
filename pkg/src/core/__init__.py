"""Core модули для конфигурации, логирования и ошибок"""
