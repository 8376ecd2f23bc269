"""Non-neural core of a video reasoning segmentation pipeline.

Answer parsing, GRPO-style reward shaping with Hungarian matching, the
text-guided frame sampler, J/F/gIoU/cIoU metrics and a pluggable backend
boundary for the neural stages.
"""

from .answer import ObjectPrediction, RolloutText, format_answer, parse_answer, validate_format
from .difficulty import DifficultyConfig, DifficultyProfile, aggregate_difficulty, token_budget
from .geometry import BBox, BinaryMask, LabeledPoint, mask_iou
from .matching import Assignment, GroundTruthObject, hungarian, match_objects
from .metrics import EvalReport, c_iou, contour_accuracy, g_iou, jf_scores, region_similarity
from .rewards import RewardBreakdown, RewardConfig, compute_reward, soft_length_penalty
from .sampler import KeySegment, SamplerConfig, SamplingPlan, VideoMeta, plan_sampling

__version__ = "0.1.0"

__all__ = [
    "Assignment", "BBox", "BinaryMask", "DifficultyConfig", "DifficultyProfile", "EvalReport",
    "GroundTruthObject", "KeySegment", "LabeledPoint", "ObjectPrediction", "RewardBreakdown",
    "RewardConfig", "RolloutText", "SamplerConfig", "SamplingPlan", "VideoMeta",
    "aggregate_difficulty", "c_iou", "compute_reward", "contour_accuracy", "format_answer", "g_iou",
    "hungarian", "jf_scores", "mask_iou", "match_objects", "parse_answer", "plan_sampling",
    "region_similarity", "soft_length_penalty", "token_budget", "validate_format",
]
