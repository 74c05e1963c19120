import logging

from app.database import create_tables

logger = logging.getLogger(__name__)


def startup() -> None:
    # called before the first ledger write
    create_tables()
    logger.debug("run ledger tables ready")
