from .command_wrapper import handle_command_exceptions
from .json_encoder import TunerJSONEncoder, dumps
from .seeds import derive_seed

__all__ = ["handle_command_exceptions", "TunerJSONEncoder", "dumps", "derive_seed"]
