import logging
import time

logger = logging.getLogger(__name__)


class Span():
    """
    Lightweight timing span. Records attributes and its wall-clock duration,
    which is logged at DEBUG when the span closes.
    """
    name: str
    attributes: dict
    started: float
    duration: float

    def __init__(self, name: str, parent: 'Span' = None):
        self.name = name if parent is None else f"{parent.name}/{name}"
        self.attributes = {}
        self.started = 0.0
        self.duration = 0.0

    def __enter__(self):
        self.started = time.perf_counter()
        return self

    def __exit__(self, *args):
        self.duration = time.perf_counter() - self.started
        logger.debug("span %s took %.3fs %s", self.name, self.duration, self.attributes)

    def set_attribute(self, key, value):
        self.attributes[key] = value


def start_span(span_name, parent=None):
    return Span(span_name, parent)
