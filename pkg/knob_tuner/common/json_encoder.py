import json
import datetime
from enum import Enum

import numpy as np


class TunerJSONEncoder(json.JSONEncoder):
    """JSON encoder aware of numpy scalars/arrays, datetimes and enums."""

    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, (datetime.datetime, datetime.date)):
            return obj.isoformat()
        if hasattr(obj, 'isoformat'):  # Handle any object with isoformat method
            return obj.isoformat()
        return super().default(obj)


def dumps(document, **kwargs):
    """Serialize a document with the toolkit encoder."""
    return json.dumps(document, cls=TunerJSONEncoder, **kwargs)
