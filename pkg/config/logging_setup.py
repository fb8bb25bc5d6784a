"""
Configuração do logging da aplicação.

Um único handler na raiz; os módulos usam logging.getLogger(__name__).
O nível vem do argumento ou da variável de ambiente LOG_LEVEL.
"""
import logging
import os
from typing import Optional


LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """
    Instala os handlers de logging (idempotente).

    Args:
        level: Nome do nível ('DEBUG', 'INFO', ...); omissão → LOG_LEVEL ou INFO
        log_file: Ficheiro adicional para as mensagens
    """
    level_name = (level or os.environ.get('LOG_LEVEL', 'INFO')).upper()
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(level=level_name, format=LOG_FORMAT, handlers=handlers, force=True)
