/** Wire-shaped record types for the world-server protocol. */

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface Quat {
  x: number;
  y: number;
  z: number;
  w: number;
}

export interface Pose {
  position: Vec3;
  orientation: Quat;
}

export interface Twist {
  linear: Vec3;
  angular: Vec3;
}

export interface Color {
  r: number;
  g: number;
  b: number;
  a: number;
}

export interface Material {
  ambient: Color;
  diffuse: Color;
  specular: Color;
  emissive: Color;
}

export interface ModelState {
  name: string;
  pose: Pose;
  twist: Twist;
  reference_frame: string;
}

export interface LinkState {
  model_name: string;
  link_name: string;
  pose: Pose;
  twist: Twist;
}

export interface VisualState {
  model_name: string;
  link_name: string;
  visual_name: string;
  material: Material;
  transparency: number;
  visible: boolean;
}

export interface LightState {
  name: string;
  color: Color;
  attenuation_constant: number;
  attenuation_linear: number;
  attenuation_quadratic: number;
}

export type LinkKey = { model_name: string; link_name: string };
export type VisualKey = { model_name: string; link_name: string; visual_name: string };

/** Per-entry status of a batched set. */
export type SetStatus = "OK" | "NOT_FOUND" | "INVALID";

export const TOPICS = ["clock", "model_states", "link_states", "visual_states"] as const;
export type Topic = (typeof TOPICS)[number];

export interface TopicMessage {
  topic: Topic;
  body: Record<string, unknown>;
}

export function identityPose(): Pose {
  return {
    position: { x: 0, y: 0, z: 0 },
    orientation: { x: 0, y: 0, z: 0, w: 1 },
  };
}

export function zeroTwist(): Twist {
  return { linear: { x: 0, y: 0, z: 0 }, angular: { x: 0, y: 0, z: 0 } };
}
