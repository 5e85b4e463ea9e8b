// Client-side mirror of the 10-template concise-instruction grammar. The
// server re-parses every submitted instruction, so these strings must match
// the service's templates exactly.

export interface TemplatePair {
  full: string;
  bare: string;
}

export const TEMPLATES: TemplatePair[] = [
  {
    full: "You are in {start_type} {start_id}. Go to {goal_type} {goal_id} and stop {stop_condition}.",
    bare: "You are in {start_type} {start_id}. Go to {goal_type} {goal_id}.",
  },
  {
    full: "Starting from {start_type} {start_id}, walk to {goal_type} {goal_id} and stop {stop_condition}.",
    bare: "Starting from {start_type} {start_id}, walk to {goal_type} {goal_id}.",
  },
  {
    full: "You begin in {start_type} {start_id}. Head to {goal_type} {goal_id}, then stop {stop_condition}.",
    bare: "You begin in {start_type} {start_id}. Head to {goal_type} {goal_id}.",
  },
  {
    full: "From {start_type} {start_id}, make your way to {goal_type} {goal_id} and wait {stop_condition}.",
    bare: "From {start_type} {start_id}, make your way to {goal_type} {goal_id}.",
  },
  {
    full: "Leave {start_type} {start_id} and go to {goal_type} {goal_id}. Stop {stop_condition}.",
    bare: "Leave {start_type} {start_id} and go to {goal_type} {goal_id}.",
  },
  {
    full: "Your current location is {start_type} {start_id}. Navigate to {goal_type} {goal_id} and halt {stop_condition}.",
    bare: "Your current location is {start_type} {start_id}. Navigate to {goal_type} {goal_id}.",
  },
  {
    full: "Starting in {start_type} {start_id}, find {goal_type} {goal_id} and stop once you are {stop_condition}.",
    bare: "Starting in {start_type} {start_id}, find {goal_type} {goal_id}.",
  },
  {
    full: "You start in {start_type} {start_id}. Proceed to {goal_type} {goal_id} and finish {stop_condition}.",
    bare: "You start in {start_type} {start_id}. Proceed to {goal_type} {goal_id}.",
  },
  {
    full: "Move from {start_type} {start_id} to {goal_type} {goal_id} and come to a stop {stop_condition}.",
    bare: "Move from {start_type} {start_id} to {goal_type} {goal_id}.",
  },
  {
    full: "Begin in {start_type} {start_id}. Your destination is {goal_type} {goal_id}; stop {stop_condition}.",
    bare: "Begin in {start_type} {start_id}. Your destination is {goal_type} {goal_id}.",
  },
];

export interface InstructionForm {
  templateId: number;
  startType: string;
  startId: number;
  goalType: string;
  goalId: number;
  stopCondition: string;
}

export const composeInstruction = (form: InstructionForm): string => {
  const pair = TEMPLATES[form.templateId];
  if (!pair) {
    throw new Error(`unknown template id ${form.templateId}`);
  }
  if (form.stopCondition.includes(".")) {
    throw new Error("stop condition must not contain '.'");
  }
  const text = form.stopCondition ? pair.full : pair.bare;
  return text
    .replace("{start_type}", form.startType)
    .replace("{start_id}", String(form.startId))
    .replace("{goal_type}", form.goalType)
    .replace("{goal_id}", String(form.goalId))
    .replace("{stop_condition}", form.stopCondition);
};
