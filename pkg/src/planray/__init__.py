"""planray: grid floor-plan partitioning with ray-cast walls and a PPO trainer."""

from .env import (
    ActionOutOfRange,
    EpisodeOver,
    LayoutEnv,
    StepResult,
    action_space_size,
    decode_action,
    encode_action,
    evaluate_room,
    terminal_reward,
)
from .grid import (
    FREE,
    MASKED,
    WALL_HARD,
    WALL_SOFT,
    GridSpec,
    InvalidSpec,
    LayoutGrid,
    Region,
    free_regions,
    layout_hash,
    new_grid,
)
from .multi import MultiLayoutEnv, apply_transform, ownership
from .obs import Observation, observe_features, observe_image
from .scenario import (
    N_MAX_ROOMS,
    ParseError,
    Scenario,
    ValidationError,
    builtin_scenarios,
    get_scenario,
    load_scenario,
    mini3_scenario,
    save_scenario,
    validate_scenario,
)
from .walls import (
    CutEvent,
    PartitionReject,
    PlacedWall,
    PlacementOutcome,
    ResimulateFailed,
    RoomMap,
    WallSpec,
    adjacency_matrix,
    place_wall,
    resimulate,
    room_metrics,
    room_partition,
    validate_placement,
)

__version__ = "0.1.0"
