/**
 * Canonical request encoding, byte-compatible with the server's reference
 * encoders (pinned by golden/requests.jsonl).
 *
 * The crucial difference from JSON.stringify is number formatting: real-valued
 * fields always carry a decimal point or exponent ("1.0", not "1"), exponents
 * are padded to two digits, and the positional/exponent switchover matches
 * CPython's repr. Integer-valued fields (ids, ticks, times) stay plain.
 */

import type {
  Color,
  LightState,
  LinkKey,
  LinkState,
  Material,
  ModelState,
  Pose,
  Twist,
  VisualKey,
  VisualState,
} from "./types.js";

/** Format a float the way CPython repr() does. */
export function realText(v: number): string {
  if (!Number.isFinite(v)) {
    throw new Error(`non-finite number on the wire: ${v}`);
  }
  const a = Math.abs(v);
  if (Number.isInteger(v) && a < 1e16) {
    if (Object.is(v, -0)) return "-0.0";
    return v.toFixed(1);
  }
  if (a >= 1e16 || (a > 0 && a < 1e-4)) {
    const [mantissa, exp] = v.toExponential().split("e");
    const expNum = Number(exp);
    const sign = expNum < 0 ? "-" : "+";
    const digits = String(Math.abs(expNum)).padStart(2, "0");
    return `${mantissa}e${sign}${digits}`;
  }
  return String(v);
}

export function intText(v: number): string {
  if (!Number.isSafeInteger(v) || v < 0) {
    throw new Error(`expected an unsigned integer, got ${v}`);
  }
  return String(v);
}

/** JSON string literal with non-ASCII escaped, matching ensure_ascii output. */
export function stringText(s: string): string {
  return JSON.stringify(s).replace(/[-￿]/g, (ch) => {
    return "\\u" + ch.charCodeAt(0).toString(16).padStart(4, "0");
  });
}

function vec3Text(v: { x: number; y: number; z: number }): string {
  return `{"x":${realText(v.x)},"y":${realText(v.y)},"z":${realText(v.z)}}`;
}

function quatText(q: { x: number; y: number; z: number; w: number }): string {
  return `{"x":${realText(q.x)},"y":${realText(q.y)},"z":${realText(q.z)},"w":${realText(q.w)}}`;
}

export function poseText(p: Pose): string {
  return `{"position":${vec3Text(p.position)},"orientation":${quatText(p.orientation)}}`;
}

function twistText(t: Twist): string {
  return `{"linear":${vec3Text(t.linear)},"angular":${vec3Text(t.angular)}}`;
}

function colorText(c: Color): string {
  return `{"r":${realText(c.r)},"g":${realText(c.g)},"b":${realText(c.b)},"a":${realText(c.a)}}`;
}

function materialText(m: Material): string {
  return (
    `{"ambient":${colorText(m.ambient)},"diffuse":${colorText(m.diffuse)},` +
    `"specular":${colorText(m.specular)},"emissive":${colorText(m.emissive)}}`
  );
}

export function modelStateText(s: ModelState): string {
  return (
    `{"name":${stringText(s.name)},"pose":${poseText(s.pose)},` +
    `"twist":${twistText(s.twist)},"reference_frame":${stringText(s.reference_frame)}}`
  );
}

export function linkStateText(s: LinkState): string {
  return (
    `{"model_name":${stringText(s.model_name)},"link_name":${stringText(s.link_name)},` +
    `"pose":${poseText(s.pose)},"twist":${twistText(s.twist)}}`
  );
}

export function visualStateText(s: VisualState): string {
  return (
    `{"model_name":${stringText(s.model_name)},"link_name":${stringText(s.link_name)},` +
    `"visual_name":${stringText(s.visual_name)},"material":${materialText(s.material)},` +
    `"transparency":${realText(s.transparency)},"visible":${s.visible}}`
  );
}

export function lightStateText(s: LightState): string {
  return (
    `{"name":${stringText(s.name)},"color":${colorText(s.color)},` +
    `"attenuation_constant":${realText(s.attenuation_constant)},` +
    `"attenuation_linear":${realText(s.attenuation_linear)},` +
    `"attenuation_quadratic":${realText(s.attenuation_quadratic)}}`
  );
}

function nameList(names: string[]): string {
  return `[${names.map(stringText).join(",")}]`;
}

function linkKeyText(k: LinkKey): string {
  return `{"model_name":${stringText(k.model_name)},"link_name":${stringText(k.link_name)}}`;
}

function visualKeyText(k: VisualKey): string {
  return (
    `{"model_name":${stringText(k.model_name)},"link_name":${stringText(k.link_name)},` +
    `"visual_name":${stringText(k.visual_name)}}`
  );
}

function request(id: number, op: string, bodyText: string): string {
  return `{"id":${intText(id)},"op":"${op}","body":${bodyText}}\n`;
}

export const encode = {
  getModelStates: (id: number, names: string[]) =>
    request(id, "get_model_states", `{"names":${nameList(names)}}`),
  setModelStates: (id: number, states: ModelState[]) =>
    request(id, "set_model_states", `{"states":[${states.map(modelStateText).join(",")}]}`),
  getModelState: (id: number, name: string) =>
    request(id, "get_model_state", `{"name":${stringText(name)}}`),
  setModelState: (id: number, state: ModelState) =>
    request(id, "set_model_state", `{"state":${modelStateText(state)}}`),
  getLinkStates: (id: number, keys: LinkKey[]) =>
    request(id, "get_link_states", `{"names":[${keys.map(linkKeyText).join(",")}]}`),
  setLinkStates: (id: number, states: LinkState[]) =>
    request(id, "set_link_states", `{"states":[${states.map(linkStateText).join(",")}]}`),
  getVisualStates: (id: number, keys: VisualKey[]) =>
    request(id, "get_visual_states", `{"names":[${keys.map(visualKeyText).join(",")}]}`),
  setVisualStates: (id: number, states: VisualState[]) =>
    request(id, "set_visual_states", `{"states":[${states.map(visualStateText).join(",")}]}`),
  getLightStates: (id: number, names: string[]) =>
    request(id, "get_light_states", `{"names":${nameList(names)}}`),
  setLightStates: (id: number, states: LightState[]) =>
    request(id, "set_light_states", `{"states":[${states.map(lightStateText).join(",")}]}`),
  spawnModel: (id: number, name: string, xml: string, initialPose: Pose) =>
    request(
      id,
      "spawn_model",
      `{"name":${stringText(name)},"xml":${stringText(xml)},"initial_pose":${poseText(initialPose)}}`,
    ),
  deleteModel: (id: number, name: string) =>
    request(id, "delete_model", `{"name":${stringText(name)}}`),
  subscribe: (id: number, topics: string[]) =>
    request(id, "subscribe", `{"topics":${nameList(topics)}}`),
  advanceClock: (id: number, ticks: number) =>
    request(id, "advance_clock", `{"ticks":${intText(ticks)}}`),
};
