FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


def fnv1a64(data) -> int:
    """FNV-1a 64-bit hash of ``bytes`` or ``str`` (UTF-8)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def hex64(value: int) -> str:
    return f"{value:016x}"
