"""Dataset pipeline: procedural plans, episodes, instructions, QA generation."""

from .actions import (
    balance_actions,
    decompose_action,
    decompose_sequence,
    merge_actions,
    sample_video_frames,
)
from .episodes import (
    Episode,
    RegionTrace,
    annotate_trajectory,
    compile_path_to_actions,
    filter_episodes,
    gen_episodes,
    load_episode,
    save_episode,
)
from .export import export_dataset
from .floorgen import gen_synthetic_floorplan
from .instructions import Instruction, TEMPLATES, gen_instruction, parse_instruction
from .qa import (
    QaRecord,
    gen_localization_qa,
    gen_nav_qa,
    gen_summarization_qa,
    gen_trajectory_reasoning_qa,
)
from .vocab import CORRIDOR_TYPE, REGION_TYPES, stop_phrases_for

__all__ = [
    "CORRIDOR_TYPE",
    "Episode",
    "Instruction",
    "QaRecord",
    "REGION_TYPES",
    "RegionTrace",
    "TEMPLATES",
    "annotate_trajectory",
    "balance_actions",
    "compile_path_to_actions",
    "decompose_action",
    "decompose_sequence",
    "export_dataset",
    "filter_episodes",
    "gen_episodes",
    "gen_instruction",
    "gen_localization_qa",
    "gen_nav_qa",
    "gen_summarization_qa",
    "gen_synthetic_floorplan",
    "gen_trajectory_reasoning_qa",
    "load_episode",
    "merge_actions",
    "parse_instruction",
    "sample_video_frames",
    "save_episode",
    "stop_phrases_for",
]
