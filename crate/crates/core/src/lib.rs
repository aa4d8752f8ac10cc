pub mod concept;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod fixture;
pub mod lloyd;
pub mod matrix;
pub mod metacluster;
pub mod pipeline;
pub mod report;
pub mod topicmodel;
