def _text(value):
    if isinstance(value, bool):
        return str(value).lower()
    if value is None:
        return '-'
    return str(value)


def to_key_values(record):
    """key=value lines in insertion order"""
    return ''.join(f"{key}={_text(value)}\n" for key, value in record.items())


def frame_to_text(df):
    """Plain-text table for stdout; empty frames print a placeholder"""
    if df is None or df.empty:
        return "(none)\n"
    return df.to_string(index=False) + '\n'
