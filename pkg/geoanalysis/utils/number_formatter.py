from fractions import Fraction
import math


class NumberConverter:
    SIGNIFICANT_DIGITS = 12
    FLOAT_FORMAT = '%.12g'

    @staticmethod
    def fixed(value):
        """Locale-independent 12 significant digit rendering; infinities become 'inf'."""
        if value is None:
            return ''
        if isinstance(value, (bool,)):
            return 'true' if value else 'false'
        if isinstance(value, int):
            return str(value)
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        text = NumberConverter.FLOAT_FORMAT % value
        # '-0' and '0' must render identically
        return '0' if text in ('-0', '0') else text

    @staticmethod
    def joined(values, separator=';'):
        return separator.join(NumberConverter.fixed(v) for v in values)

    @staticmethod
    def parse_real(text):
        """
        Parses '0.25', '1/64' or '1e-3'.

        :raises ValueError: If the text is not a real number or a fraction.
        """
        text = str(text).strip()
        if not text:
            raise ValueError("empty number")
        if '/' in text:
            return float(Fraction(text.replace(' ', '')))
        value = float(text)
        if math.isnan(value):
            raise ValueError(f"not a number: {text}")
        return value

    @staticmethod
    def parse_list(text, parse=None):
        parse = parse or NumberConverter.parse_real
        items = [item for item in str(text).replace(';', ',').split(',') if item.strip()]
        return [parse(item) for item in items]
