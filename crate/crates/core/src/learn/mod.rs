//! Learning on Gram matrices: change-point detection with the kernel Fisher
//! discriminant ratio, support vector classification, kernel principal
//! components and cross-validation.

mod cv;
mod kfdr;
mod kpca;
mod svm;

pub use cv::{
    accuracy, confusion_matrix, cross_validate, fit_predict, select_c, select_combination, stratified_folds,
    train_test_split, CvReport, LabelSet, C_GRID,
};
pub use kfdr::{detect_changepoint, kfdr_series, KfdrSeries};
pub use kpca::kernel_pca;
pub use svm::{svm_predict, svm_train, BinarySvm, TrainedClassifier, KKT_TOL};
