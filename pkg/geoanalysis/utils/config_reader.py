import configparser
import re

from geoanalysis.exceptions.exceptions import ConfigurationError
from geoanalysis.utils.number_formatter import NumberConverter

SECTION_PATTERN = re.compile(r'^\s*\[(?P<name>[^\]]+)\]')
OPTION_PATTERN = re.compile(r'^(?P<key>[^=:\s][^=:]*?)\s*[=:]\s*')


class ConfigLocator:
    """Maps sections and keys of sectioned key-value text to line/column positions."""

    def __init__(self, text):
        self.sections = {}
        self.options = {}
        current = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith(('#', ';')):
                continue
            match = SECTION_PATTERN.match(line)
            if match:
                current = match.group('name').strip()
                self.sections.setdefault(current, (lineno, line.index('[') + 1))
                continue
            match = OPTION_PATTERN.match(line)
            if match and current is not None and not line[0].isspace():
                key = match.group('key').strip().lower()
                self.options.setdefault((current, key), (lineno, match.end() + 1))

    def section(self, name):
        return self.sections.get(name, (None, None))

    def option(self, section, key):
        return self.options.get((section, key.lower()), self.section(section))


class SectionReader:
    """Typed access to one section, raising ConfigurationError with positions."""

    def __init__(self, parser, locator, name):
        self.name = name
        self.section = parser[name]
        self.locator = locator

    def keys(self):
        return list(self.section.keys())

    def has(self, key):
        return key in self.section

    def fail(self, key, message):
        line, column = self.locator.option(self.name, key) if key else self.locator.section(self.name)
        raise ConfigurationError(f"[{self.name}] {message}", line=line, column=column)

    def raw(self, key, default=None, required=False):
        if key not in self.section:
            if required:
                self.fail(None, f"missing required key '{key}'")
            return default
        return self.section[key].strip()

    def real(self, key, default=None, required=False):
        text = self.raw(key, required=required)
        if text is None:
            return default
        try:
            return NumberConverter.parse_real(text)
        except (ValueError, ZeroDivisionError):
            self.fail(key, f"'{key}' expects a real number, got '{text}'")

    def integer(self, key, default=None, required=False):
        text = self.raw(key, required=required)
        if text is None:
            return default
        try:
            return int(text)
        except ValueError:
            self.fail(key, f"'{key}' expects an integer, got '{text}'")

    def boolean(self, key, default=False):
        text = self.raw(key)
        if text is None:
            return default
        lowered = text.lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off'):
            return False
        self.fail(key, f"'{key}' expects a boolean, got '{text}'")

    def reals(self, key, default=None, required=False):
        text = self.raw(key, required=required)
        if text is None:
            return default
        try:
            values = NumberConverter.parse_list(text)
        except (ValueError, ZeroDivisionError):
            self.fail(key, f"'{key}' expects a comma-separated list of reals, got '{text}'")
        if not values:
            self.fail(key, f"'{key}' must not be empty")
        return values

    def integers(self, key, default=None, required=False):
        text = self.raw(key, required=required)
        if text is None:
            return default
        try:
            values = NumberConverter.parse_list(text, parse=int)
        except ValueError:
            self.fail(key, f"'{key}' expects a comma-separated list of integers, got '{text}'")
        if not values:
            self.fail(key, f"'{key}' must not be empty")
        return values

    def point_list(self, key):
        """Semicolon-separated points, each a comma-separated coordinate list."""
        text = self.raw(key, required=True)
        try:
            return [NumberConverter.parse_list(chunk) for chunk in text.split(';') if chunk.strip()]
        except (ValueError, ZeroDivisionError):
            self.fail(key, f"'{key}' expects points like '0.5,0; -0.5,0', got '{text}'")


class ConfigReader:
    """Reads sectioned key-value text; every failure becomes a positioned ConfigurationError."""

    def __init__(self, text, source='<config>'):
        self.text = text
        self.source = source
        self.locator = ConfigLocator(text)
        self.parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#',))
        try:
            self.parser.read_string(text, source=source)
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigurationError("key-value line before any [section] header", line=exc.lineno, column=1) from exc
        except configparser.DuplicateSectionError as exc:
            raise ConfigurationError(f"duplicate section [{exc.section}]", line=exc.lineno, column=1) from exc
        except configparser.DuplicateOptionError as exc:
            raise ConfigurationError(f"duplicate key '{exc.option}' in [{exc.section}]", line=exc.lineno, column=1) from exc
        except configparser.ParsingError as exc:
            lineno, line = exc.errors[0]
            raise ConfigurationError(f"cannot parse {line.strip()!r}", line=lineno, column=1) from exc

    def sections(self, prefix=None):
        names = self.parser.sections()
        if prefix is None:
            return names
        return [name for name in names if name.startswith(prefix)]

    def section(self, name):
        return SectionReader(self.parser, self.locator, name)
