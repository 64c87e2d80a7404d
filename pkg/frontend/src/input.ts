/** Keyboard-to-dimple mapping, home-row style and remappable. */

export const DEFAULT_KEY_MAP: Record<string, number> = {
  a: 0,
  s: 1,
  d: 2,
  f: 3,
  j: 4,
  k: 5,
  l: 6,
  ";": 7,
};

export function dimpleForKey(
  key: string,
  map: Record<string, number> = DEFAULT_KEY_MAP,
): number | null {
  const dimple = map[key.toLowerCase()];
  return dimple === undefined ? null : dimple;
}
