import json
import logging
import sys

logger = logging.getLogger(__name__)


def export_data(df, format="csv"):
    """
    Serialise a result table

    Args:
        df: DataFrame to export
        format: Export format (csv, json)

    Returns:
        Text in the specified format
    """
    if format == "csv":
        return df.to_csv(index=False)
    elif format == "json":
        return df.to_json(orient="records")
    else:
        raise ValueError(f"Unsupported export format: {format}")


def write_output(text, path=None):
    """Write text to a file, or to stdout when no path is given."""
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    with open(path, "w") as f:
        f.write(text)
    logger.info("wrote %s", path)


def write_table(df, path=None, format="csv"):
    write_output(export_data(df, format), path)


def write_json(data, path=None):
    write_output(json.dumps(data, indent=2, sort_keys=True), path)
