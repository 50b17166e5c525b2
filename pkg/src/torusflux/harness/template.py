"""Template rendering for report.md

Jinja2 rendering from the packaged templates directory, with a plain
text fallback when a template cannot be loaded.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import jinja2

logger = logging.getLogger(__name__)


def format_value(value: Any, digits: int = 6) -> str:
    """Short decimal form for tables; n/a for missing values"""
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


class TemplateRenderer:
    """Jinja2 renderer for the sweep report

    Loads templates from a custom directory first, then the builtin one.
    """

    BUILTIN_TEMPLATE_DIR = Path(__file__).parent / "templates"

    TEMPLATE_REPORT = "report.md.j2"

    def __init__(self, template_dir: Optional[Path] = None, use_builtin: bool = True):
        """Initialize template renderer

        Args:
            template_dir: Custom template directory (searched first)
            use_builtin: Whether to fall back to the builtin templates
        """
        self.template_dir = Path(template_dir) if template_dir else None
        self.use_builtin = use_builtin
        self._jinja_env: Optional[jinja2.Environment] = None
        self._init_jinja()

    def _init_jinja(self) -> None:
        loader_paths = []
        if self.template_dir and self.template_dir.exists():
            loader_paths.append(str(self.template_dir))
        if self.use_builtin and self.BUILTIN_TEMPLATE_DIR.exists():
            loader_paths.append(str(self.BUILTIN_TEMPLATE_DIR))

        if loader_paths:
            self._jinja_env = jinja2.Environment(
                loader=jinja2.FileSystemLoader(loader_paths),
                autoescape=False,
                trim_blocks=True,
                lstrip_blocks=True,
                keep_trailing_newline=True,
            )
            self._jinja_env.filters["fmt"] = format_value
            logger.debug("Jinja2 initialized with paths: %s", loader_paths)
        else:
            logger.warning("No template directories found")

    def render(self, template_name: str, context: Dict[str, Any]) -> str:
        """Render a template with the given context

        Args:
            template_name: Name of the template file
            context: Template variables

        Returns:
            Rendered content string
        """
        if self._jinja_env is None:
            return self._fallback_render(context)

        try:
            template = self._jinja_env.get_template(template_name)
            return template.render(**context)
        except jinja2.TemplateError as e:
            logger.warning("Template rendering failed for %s: %s", template_name, e)
            return self._fallback_render(context)

    def _fallback_render(self, context: Dict[str, Any]) -> str:
        """Plain listing of the summary rows"""
        lines: List[str] = ["# torusflux report", ""]
        for row in context.get("summary", []):
            cells = ", ".join(f"{key}={format_value(value)}" for key, value in row.items())
            lines.append(f"- {cells}")
        lines.append("")
        return "\n".join(lines)

    def render_report(self, context: Dict[str, Any]) -> str:
        return self.render(self.TEMPLATE_REPORT, context)
