"""Language-model strategic agent: prompts, context, providers, agent."""

from .agent import LLMAgent
from .prompts import Condition, build_system_prompt, fetchplan, tool_schemas

__all__ = ["LLMAgent", "Condition", "build_system_prompt", "fetchplan", "tool_schemas"]
