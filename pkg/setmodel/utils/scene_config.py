from setmodel.scenes import GRAPH_KINDS, SCENE_TAGS, SceneSpec

SCENE_PREFIX = 'scene:'

# Keys consumed by SceneSpec itself; everything else is a generator parameter.
RESERVED_KEYS = ('generator', 'n', 'resolution')
STRING_KEYS = ('kind', 'sampling')
VECTOR_KEYS = ('center', 'axis')
INTEGER_KEYS = ('depth', 'm')
POINT_KEYS = ('points',)


def scene_from_section(reader, name):
    """
    Builds a SceneSpec from a ``[scene:<id>]`` section.

    :raises ConfigurationError: With the line and column of the offending key.
    """
    section = reader.section(name)
    tag = section.raw('generator', required=True)
    if tag not in SCENE_TAGS:
        section.fail('generator', f"unknown generator '{tag}' (expected one of {', '.join(SCENE_TAGS)})")
    n = section.integer('n', required=True)
    if n < 1:
        section.fail('n', "'n' must be at least 1")
    resolution = section.real('resolution', required=True)
    if not resolution > 0:
        section.fail('resolution', f"'resolution' must be positive, got {resolution}")

    params = {}
    for key in section.keys():
        if key in RESERVED_KEYS:
            continue
        if key in STRING_KEYS:
            params[key] = section.raw(key)
        elif key in VECTOR_KEYS:
            params[key] = section.reals(key)
        elif key in INTEGER_KEYS:
            params[key] = section.integer(key)
        elif key in POINT_KEYS:
            params[key] = section.point_list(key)
        else:
            params[key] = section.real(key)

    if tag == 'graph-of-function' and params.get('kind', 'quadratic') not in GRAPH_KINDS:
        section.fail('kind', f"unknown graph kind '{params['kind']}'")
    return SceneSpec(tag=tag, n=n, resolution=resolution, params=params, scene_id=name[len(SCENE_PREFIX):].strip())


def read_scene_specs(reader):
    return [scene_from_section(reader, name) for name in reader.sections(SCENE_PREFIX)]
