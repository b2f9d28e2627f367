from typing import Callable, List, TypeVar
import logging

import numpy

logger = logging.getLogger(__name__)

T = TypeVar('T')


def derive_seed(seed: int, *keys: int) -> int:
    """
    Deterministically derive an independent seed from `seed` and integer `keys`.
    """
    return int(numpy.random.SeedSequence([int(seed), *[int(k) for k in keys]]).generate_state(1)[0])


def parse_values(text: str, convert: Callable[[str], T] = float) -> List[T]:
    """
    Parse a comma separated list like "0.01,0.05,0.1".
    """
    values = []
    for token in text.split(','):
        token = token.strip()
        if not token:
            continue
        values.append(convert(token))
    return values


def provenance_line(master_seed: int, **fields) -> str:
    """
    The comment line every output CSV starts with.
    """
    parts = [f"master_seed={master_seed}"]
    parts.extend(f"{k}={v}" for k, v in fields.items())
    return '# ' + ' '.join(parts) + '\n'


def format_float(v: float) -> str:
    if v is None or not numpy.isfinite(v):
        return 'nan'
    return f"{v:.10g}"
