"""Duration formatting for render timing logs."""

# convert time in seconds to a MM:SS.sss format


def format_time(seconds: float | None) -> str:
    if seconds is None or seconds < 0:
        return "N/A"
    minutes = int(seconds // 60)
    secs = seconds % 60
    return f"{minutes:02}:{secs:06.3f}"


def format_rate(count: int, seconds: float) -> str:
    """
    Format a throughput such as rays per second.

    Args:
        count: Number of processed items
        seconds: Elapsed wall time

    Returns:
        Human readable rate, e.g. "1.25M/s"
    """
    if seconds <= 0:
        return "N/A"
    rate = count / seconds
    for unit, scale in (("G", 1e9), ("M", 1e6), ("k", 1e3)):
        if rate >= scale:
            return f"{rate / scale:.2f}{unit}/s"
    return f"{rate:.1f}/s"
