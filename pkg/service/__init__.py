"""
Serviço HTTP de inferência.
"""

from service.endpoints import get_detector, register_detection_routes, reset_detector

__all__ = [
    'get_detector',
    'register_detection_routes',
    'reset_detector'
]
